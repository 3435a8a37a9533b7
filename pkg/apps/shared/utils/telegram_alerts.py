"""
Telegram bot integration for error alerts from API requests and long runs.
"""
import html
import logging
import threading
from typing import Any, Dict, Optional

from core import config

logger = logging.getLogger(__name__)

MAX_TRACEBACK_LENGTH = 3000

bot = None
if config.TELEGRAM_BOT_TOKEN and ':' in config.TELEGRAM_BOT_TOKEN:
    try:
        import telebot
        bot = telebot.TeleBot(config.TELEGRAM_BOT_TOKEN)
    except ImportError:
        logger.warning("pyTelegramBotAPI is not installed. Telegram alerts will be disabled.")


def _send_telegram_message(text: str):
    """Send message to Telegram channel."""
    if not bot:
        return
    try:
        bot.send_message(
            chat_id=config.TELEGRAM_CHANNEL_ID,
            text=text,
            parse_mode='HTML',
            disable_web_page_preview=True
        )
    except Exception as e:
        logger.error(f"Failed to send alert to Telegram: {str(e)}")


def send_alert(text: str):
    """Send alert to Telegram in background thread."""
    if not bot:
        return
    threading.Thread(target=_send_telegram_message, args=(text,), daemon=True).start()


def client_address(request) -> Optional[str]:
    if not request:
        return None
    forwarded = request.META.get('HTTP_X_FORWARDED_FOR')
    if forwarded:
        return forwarded.split(',')[0].strip()
    return request.META.get('REMOTE_ADDR')


def format_alert(traceback_text: str, message: str, source: str, context: Dict[str, Any] = None) -> str:
    safe_traceback = html.escape(traceback_text)
    if len(safe_traceback) > MAX_TRACEBACK_LENGTH:
        safe_traceback = safe_traceback[:MAX_TRACEBACK_LENGTH] + "\n... (truncated)"
    details = "".join(
        f"• <b>{html.escape(str(key))}:</b> <code>{html.escape(str(value))}</code>\n"
        for key, value in (context or {}).items()
    )
    return (
        "❌ <b>Exception Alert</b> ❌\n\n"
        f"✍️ <b>Message:</b> <code>{html.escape(str(message))}</code>\n\n"
        f"🔖 <b>Traceback:</b>\n<code>{safe_traceback}</code>\n\n"
        f"🌐 <b>Source:</b> <code>{html.escape(source)}</code>\n"
        f"{details}"
    )


def alert_to_telegram(
    traceback_text: str,
    message: str = "No message provided",
    request=None,
    context: Dict[str, Any] = None
):
    """Send error alert to Telegram; ``request`` for API errors, ``context`` for experiment runs."""
    if not bot:
        return
    if request is not None:
        source = f"{client_address(request) or 'unknown'}:{request.META.get('REMOTE_PORT') or 'unknown'}"
    else:
        source = "experiment runner"
    send_alert(format_alert(traceback_text, message, source, context))
