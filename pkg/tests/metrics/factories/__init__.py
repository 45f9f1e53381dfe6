from .runlogs import *
