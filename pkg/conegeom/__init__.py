from .bodies import from_config
from .omega import omega_closed_form, omega_entropy, omega_report
from .affine_surface import as_p
from .eval import run
