import logging

from eval.certify import bounds_table
from modules.equilateral.construct1 import construct_bound1
from modules.equilateral.construct2 import construct_bound2
from modules.equilateral.construct3 import construct_bound3
from modules.equilateral.subspace import ParameterError, load_spec
from tasks.equilateral.base import EXIT_OK, EXIT_VERIFICATION, EquilateralTask
from utils.commons.hparams import hparams

logger = logging.getLogger(__name__)


def select_row(table, bound, ell, enum_budget):
    if bound == 'auto':
        if ell is not None:
            raise ParameterError("--ell needs an explicit --bound")
        ranked = table.ranked(enum_budget)
        if not ranked:
            raise ParameterError(f"no construction is feasible for n = {table.n}, k = {table.k}")
        return ranked[0]
    bound = int(bound)
    rows = [r for r in table.rows if r.bound == bound]
    if bound == 1:
        return rows[0]
    if ell is None:
        if not rows:
            raise ParameterError(f"bound ({bound}) has no feasible ell for n = {table.n}, k = {table.k}")
        return table.best[bound]
    row = next((r for r in rows if r.ell == ell), None)
    if row is None:
        limit = table.n // ((bound - 1) * table.k + 1)
        raise ParameterError(f"bound ({bound}) needs 1 <= ell <= {limit}, got {ell}")
    return row


class ConstructTask(EquilateralTask):
    command = 'construct'

    def run(self):
        spec = load_spec(self.config.input)
        enum_budget = hparams.get('enum_budget', 2 ** 22) if self.config.enum_budget is None \
            else self.config.enum_budget
        row = select_row(bounds_table(spec.n, spec.k), self.config.bound, self.config.ell, enum_budget)
        logger.info(f'| n = {spec.n}, k = {spec.k}: running bound ({row.bound}), ell = {row.ell}, '
                    f'formula {float(row.raw):.4g} -> {row.ceiled}')
        if row.bound == 1:
            cert = construct_bound1(spec, enum_budget=enum_budget)
        elif row.bound == 2:
            cert = construct_bound2(spec, row.ell)
        else:
            cert = construct_bound3(spec, row.ell)
        path, report = self.write_certificate(cert, spec)
        if not report.ok:
            return EXIT_VERIFICATION
        if cert.size < row.ceiled:
            logger.error(f'| {cert.size} points, below the bound {row.ceiled}')
            return EXIT_VERIFICATION
        return EXIT_OK
