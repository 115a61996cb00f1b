from enum import Enum


class BodyKind(Enum):
    ball = 'ball'
    ellipsoid = 'ellipsoid'
    lp_ball = 'lp_ball'
    cube = 'cube'
    cross_polytope = 'cross_polytope'
    linear_image = 'linear_image'
    normalized = 'normalized'
    polar = 'polar'
    centroid = 'centroid'


class Smoothness(Enum):
    C2_plus = 'C2_plus'
    polytope = 'polytope'
    generic = 'generic'


class RuleKind(Enum):
    product_gauss = 'product_gauss'
    quasi_monte_carlo = 'quasi_monte_carlo'
    concentrated = 'concentrated'


class OmegaRoute(Enum):
    entropy = 'entropy'
    dual_entropy = 'dual-entropy'
    p_limit = 'p-limit'
    dual_p_limit = 'dual'
    closed_form = 'closed-form'
    centroid = 'centroid'


class Subcommand(Enum):
    omega = 'omega'
    asp = 'asp'
    zp = 'zp'
    theorem1 = 'theorem1'
    floating = 'floating'
    entropy = 'entropy'
    appendix = 'appendix'
    lpball_table = 'lpball-table'
    section5 = 'section5'
    surface_rhs = 'surface-rhs'
    all = 'all'
