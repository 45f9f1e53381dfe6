from .envs import *
