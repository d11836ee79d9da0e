from .config import ModelBinding, ServiceConfig
from .app import create_app

__all__ = ["ModelBinding", "ServiceConfig", "create_app"]
