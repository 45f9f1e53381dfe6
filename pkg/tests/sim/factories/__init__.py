from .worlds import *
