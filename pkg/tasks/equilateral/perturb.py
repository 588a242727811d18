import logging
import os

from modules.equilateral.perturb import (NonConvergenceError, check_sandwich, fixed_point_equilateral, load_norm,
                                         perturb_parameters)
from modules.equilateral.subspace import ParameterError, load_spec
from tasks.equilateral.base import (EXIT_NONCONVERGENCE, EXIT_OK, EXIT_SANDWICH, EXIT_VERIFICATION,
                                    EquilateralTask)
from utils.linalg.exactlin import format_rational

logger = logging.getLogger(__name__)


def smallest_ell(n, k, c):
    """Smallest ell (largest set) whose admissible c covers ``c``."""
    for ell in range(1, (n - 2 * k) // k + 1):
        try:
            _, c_max = perturb_parameters(n, k, ell)
        except ParameterError:
            break
        if c <= c_max:
            return ell
    raise ParameterError(f"no ell in [1, (n - 2k)/k] admits c = {format_rational(c)} for n = {n}, k = {k}")


class PerturbTask(EquilateralTask):
    command = 'perturb'

    def run(self):
        spec = load_spec(self.config.input)
        norm_y = load_norm(self.args.norm)
        ell = self.config.ell if self.config.ell is not None else smallest_ell(spec.n, spec.k, norm_y.c)
        path = self.out_path()
        stem = os.path.splitext(path)[0]

        sandwich = check_sandwich(spec, norm_y, seed=self.config.seed)
        self.write_json(sandwich.to_json(), f'{stem}.sandwich.json')
        if not sandwich.ok or sandwich.weight_range_ok is False:
            logger.error(f'| ||.||_Y violates its declared c = {format_rational(norm_y.c)}: '
                         f'worst ratios ({float(sandwich.lower):.6g}, {float(sandwich.upper):.6g})')
            return EXIT_SANDWICH

        try:
            cert, report = fixed_point_equilateral(spec, norm_y, ell, tol=self.config.tol,
                                                   max_iter=self.config.max_iter, alpha=self.config.alpha)
        except NonConvergenceError as e:
            self.write_json(e.report.to_json(), f'{stem}.convergence.json')
            logger.error(f'| {e}')
            return EXIT_NONCONVERGENCE
        self.write_json(report.to_json(), f'{stem}.convergence.json')
        _, verified = self.write_certificate(cert, spec, path=path)
        if not verified.ok:
            return EXIT_VERIFICATION
        return EXIT_OK
