"""
DRF exception handler: lab errors and validation failures in the response
envelope, Telegram alerts outside DEBUG.
"""
import logging
import traceback

from django.conf import settings
from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework.exceptions import ValidationError as DRFValidationError
from rest_framework.views import exception_handler

from apps.shared.exceptions.errors import VoltVarLabError
from apps.shared.utils.custom_response import CustomResponse
from apps.shared.utils.telegram_alerts import alert_to_telegram

logger = logging.getLogger(__name__)


def custom_exception_handler(exc, context):
    response = exception_handler(exc, context)
    request = context.get('request')

    logger.error(f"Exception: {exc}", exc_info=True)

    if not getattr(settings, 'DEBUG', False):
        try:
            alert_to_telegram(traceback_text=traceback.format_exc(), message=str(exc), request=request)
        except Exception as alert_error:
            logger.error(f"Failed to send Telegram alert: {alert_error}")

    if isinstance(exc, VoltVarLabError):
        return CustomResponse.lab_error(exc, request)

    if isinstance(exc, (DjangoValidationError, DRFValidationError)):
        if hasattr(exc, 'detail'):
            errors = exc.detail
        elif hasattr(exc, 'message_dict'):
            errors = exc.message_dict
        else:
            errors = {'non_field_errors': [str(exc)]}
        return CustomResponse.validation_error(errors, request)

    if response is not None:
        if response.status_code == 404:
            return CustomResponse.not_found(request)
        if response.status_code < 500:
            return response

    return CustomResponse.internal_error(request)
