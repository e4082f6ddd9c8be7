import os


BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


"""
Basic configuration
"""
SECRET_KEY = 'kohina-local-only'
DEBUG = False
INSTALLED_APPS = (
	'app',
	'utils',
)
DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


"""
Database: only run manifests live here
"""
DATABASES = {
	'default': {
		'ENGINE': 'django.db.backends.sqlite3',
		'NAME': os.path.join(BASE_DIR, 'kohina.sqlite3'),
	}
}


"""
Physical time and place settings
"""
LANGUAGE_CODE = 'en-gb'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True


"""
Laboratory
"""
LAB_DENSE_CAP = 4096
LAB_WORKERS = os.cpu_count() or 1
LAB_OUT_DIR = os.environ.get('RMT_NOISE_OUT', os.path.join(BASE_DIR, 'runs'))
LAB_ARTIFACT_VERSION = '1.0'
LAB_DELTA = 0.05
LAB_ALPHA_GRID = (1.2, 1.4, 1.5, 1.6, 1.667, 1.75, 1.85, 1.95)


"""
Logging
"""
LOGGING = {
	'version': 1,
	'disable_existing_loggers': False,
	'formatters': {
		'plain': {
			'format': '%(asctime)s %(levelname)s %(name)s: %(message)s'
		}
	},
	'handlers': {
		'console': {
			'class': 'logging.StreamHandler',
			'formatter': 'plain',
			'level': 'DEBUG'
		}
	},
	'loggers': {
		'kohina': {
			'handlers': ['console'],
			'level': os.environ.get('KOHINA_LOG_LEVEL', 'INFO'),
			'propagate': False
		}
	}
}


"""
Local settings
"""
try:
	from project.settings_local import *
except ImportError:
	pass
