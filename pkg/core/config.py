"""
Configuration module for environment variables.
"""
from pathlib import Path
from decouple import config as decouple_config, Csv

BASE_DIR = Path(__file__).resolve().parent.parent

# Django Settings
SECRET_KEY = decouple_config('SECRET_KEY', default='django-insecure-change-me-in-production')
DEBUG = decouple_config('DEBUG', default=False, cast=bool)
ALLOWED_HOSTS = decouple_config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())

# Database Configuration
DATABASE_URL = decouple_config('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}")

# Static files
STATIC_ROOT = decouple_config('STATIC_ROOT', default=str(BASE_DIR / 'staticfiles'))

# Experiment lab
VVC_OUTPUT_DIR = decouple_config('VVC_OUTPUT_DIR', default=str(BASE_DIR / 'results'))
VVC_CASES_DIR = decouple_config('VVC_CASES_DIR', default=str(BASE_DIR / 'apps' / 'gridflow' / 'cases'))
VVC_CACHE_DIR = decouple_config('VVC_CACHE_DIR', default=str(Path(VVC_OUTPUT_DIR) / 'cache'))
VVC_DEFAULT_SEED = decouple_config('VVC_DEFAULT_SEED', default=0, cast=int)
VVC_DEFAULT_DAYS = decouple_config('VVC_DEFAULT_DAYS', default=100, cast=int)
VVC_LOG_LEVEL = decouple_config('VVC_LOG_LEVEL', default='INFO')
VVC_RUN_ACCEPTANCE = decouple_config('VVC_RUN_ACCEPTANCE', default=False, cast=bool)

# Telegram Bot Settings
TELEGRAM_BOT_TOKEN = decouple_config('TELEGRAM_BOT_TOKEN', default=None)
TELEGRAM_CHANNEL_ID = decouple_config('TELEGRAM_CHANNEL_ID', default=None)
