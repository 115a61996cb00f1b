import numpy as np

from conegeom.bodies import Ellipsoid, EuclideanBall, LpBall
from conegeom.geometry import normalized


def unit_area_disc():
    return normalized(EuclideanBall(2))


def ellipse():
    return Ellipsoid(np.diag([2.0, 0.5]))


def rotated_ellipse():
    c, s = np.cos(0.3), np.sin(0.3)
    rotation = np.array([[c, -s], [s, c]])
    return Ellipsoid(rotation @ np.diag([1.5, 0.6]) @ rotation.T)


def lp_ball(r=3.0, n=2):
    return LpBall(n, r)


def random_matrix(rng, n, max_condition=10.0):
    """A random matrix with condition number at most `max_condition`."""
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    singular = np.exp(rng.uniform(0.0, np.log(max_condition), size=n))
    singular[0], singular[-1] = 1.0, min(singular[-1], max_condition)
    return q1 @ np.diag(singular) @ q2
