from .catalog import (Cube, CrossPolytope, Ellipsoid, EuclideanBall, LpBall, body_dicts,
                      from_config)
from .lp_ball import (EllipsoidSpec, LpBallSpec, lp_ball_as_p, lp_ball_boundary_curvature,
                      lp_ball_normal, lp_ball_polar_volume, lp_ball_volume)
from conegeom.geometry import linear_image, normalized
