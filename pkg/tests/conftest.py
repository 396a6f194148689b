import numpy as np
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def gauss(t, d=1):
    r2 = t * t if d == 1 else np.sum(t * t, axis=-1)
    return np.exp(-np.pi * r2)
