"""Utils package"""
from .baseline import BaselineMethod
from .config_loader import load_config

__all__ = ['BaselineMethod', 'load_config']
