from .networks import *
