import logging
import os

from data_gen.specs import GenerationError, SpecGenerator
from modules.equilateral.subspace import ParameterError, validate
from tasks.equilateral.base import EXIT_OK, EquilateralTask
from utils.commons.hparams import hparams
from utils.linalg.exactlin import parse_rational

logger = logging.getLogger(__name__)


def _need(args, *names):
    missing = [f'--{a}' for a in names if getattr(args, a) is None]
    if missing:
        raise ParameterError(f"gen {args.kind} needs {', '.join(missing)}")


class GenTask(EquilateralTask):
    command = 'gen'

    def run(self):
        args, seed = self.args, self.config.seed
        gen = SpecGenerator(seed)
        try:
            if args.kind in ('subspace', 'degenerate'):
                _need(args, 'n', 'k')
                A = gen.random_subspace(args.n, args.k, nonzero=args.nonzero) if args.kind == 'subspace' \
                    else gen.degenerate_subspace(args.n, args.k)
                obj, name = validate(A).to_json(), f'{args.kind}_n{args.n}_k{args.k}'
            elif args.kind == 'polytope':
                _need(args, 'd', 'f')
                obj, name = gen.random_polytope(args.d, args.f).to_json(), f'polytope_d{args.d}_f{args.f}'
            else:
                _need(args, 'n', 'c')
                obj, name = gen.random_norm(args.n, parse_rational(args.c)).to_json(), f'norm_n{args.n}'
        except GenerationError as e:
            raise ParameterError(str(e))
        path = self.config.out or os.path.join(hparams.get('out_dir', 'results'), f'{name}_s{seed}.json')
        if os.path.dirname(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
        self.write_json(obj, path)
        logger.info(f'| wrote {path}')
        return EXIT_OK
