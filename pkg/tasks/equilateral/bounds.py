import json

from eval.certify import bounds_table
from modules.equilateral.subspace import ParameterError
from tasks.equilateral.base import EXIT_OK, EquilateralTask


def format_table(table):
    lines = [f'n = {table.n}, k = {table.k}, dim = {table.n - table.k}',
             f'{"bound":>5} {"ell":>4} {"value":>14} {"size >=":>8}']
    for r in table.rows:
        best = ' *' if table.best[r.bound] == r else ''
        ell = '-' if r.ell is None else str(r.ell)
        lines.append(f'{r.bound:>5} {ell:>4} {float(r.raw):>14.4f} {r.ceiled:>8}{best}')
    lines.append(f'Petty target (dim + 1): {table.petty_target}')
    lines.append(f'ceiling 2^dim: {table.ceiling}')
    return '\n'.join(lines)


class BoundsTask(EquilateralTask):
    command = 'bounds'

    def run(self):
        try:
            table = bounds_table(self.args.n, self.args.k)
        except ValueError as e:
            raise ParameterError(str(e))
        if self.args.json:
            print(json.dumps(table.to_json(), sort_keys=True))
        else:
            print(format_table(table))
        return EXIT_OK
