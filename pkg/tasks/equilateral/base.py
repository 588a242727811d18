import json
import logging
import os
from dataclasses import dataclass

from eval.certify import verify_certificate
from modules.equilateral.certificate import CertificateFormatError, load_certificate, save_certificate
from modules.equilateral.construct1 import BudgetExceededError
from modules.equilateral.perturb import NonConvergenceError, NormSpecError, SandwichViolationError
from modules.equilateral.polytope import PolytopeSpecError
from modules.equilateral.subspace import ConsistencyError, InvalidSpecError, ParameterError
from utils.commons.hparams import hparams
from utils.commons.meters import Timer
from utils.linalg.exactlin import DimensionError, RationalFormatError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VERIFICATION = 3
EXIT_BUDGET = 4
EXIT_NONCONVERGENCE = 5
EXIT_SANDWICH = 6

INVALID_INPUT = (InvalidSpecError, PolytopeSpecError, NormSpecError, ParameterError, CertificateFormatError,
                 RationalFormatError, DimensionError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError)


@dataclass
class RunConfig:
    command: str
    input: str = None
    bound: str = 'auto'
    ell: int = None
    tol: float = None
    max_iter: int = None
    alpha: float = None
    enum_budget: int = None
    out: str = None
    seed: int = None

    @classmethod
    def from_args(cls, args):
        inp = next((getattr(args, a) for a in ('spec', 'polytope', 'certificate') if getattr(args, a, None)), None)
        if args.command == 'verify':
            inp = args.certificate
        return cls(
            command=args.command,
            input=inp,
            bound=getattr(args, 'bound', 'auto'),
            ell=getattr(args, 'ell', None),
            tol=getattr(args, 'tol', None),
            max_iter=getattr(args, 'max_iter', None),
            alpha=getattr(args, 'alpha', None),
            enum_budget=getattr(args, 'enum_budget', None),
            out=args.out,
            seed=hparams.get('seed', 1234) if args.seed is None else args.seed,
        )

    def validate(self):
        if self.ell is not None and self.ell < 1:
            raise ParameterError(f"--ell must be >= 1, got {self.ell}")
        if self.tol is not None and self.tol <= 0:
            raise ParameterError(f"--tol must be positive, got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ParameterError(f"--max_iter must be >= 1, got {self.max_iter}")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise ParameterError(f"--alpha must be in (0, 1], got {self.alpha}")
        if self.enum_budget is not None and self.enum_budget < 1:
            raise ParameterError(f"--enum_budget must be >= 1, got {self.enum_budget}")


class EquilateralTask:
    command = None

    def __init__(self, args):
        self.args = args
        self.config = RunConfig.from_args(args)

    def run(self):
        raise NotImplementedError

    def out_path(self, suffix=None):
        if self.config.out is not None:
            path = self.config.out
        else:
            stem = os.path.splitext(os.path.basename(self.config.input or self.command))[0]
            path = os.path.join(hparams.get('out_dir', 'results'), f'{stem}.{suffix or self.command}.json')
        if os.path.dirname(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
        return path

    def write_certificate(self, cert, spec=None, path=None):
        """Attach evidence, save, then re-verify from the written file alone."""
        report = verify_certificate(cert, spec)
        if not report.ok:
            logger.error(f'| certificate fails verification: {report.failures[:3]}')
            return None, report
        cert.evidence = report.evidence
        path = path or self.out_path()
        save_certificate(cert, path)
        report = verify_certificate(load_certificate(path), spec)
        if not report.ok:
            logger.error(f'| {path} fails verification after reload: {report.failures[:3]}')
            return path, report
        logger.info(f'| wrote {path}: {cert.size} points, {report.checked_pairs} pairs verified')
        return path, report

    @staticmethod
    def write_json(obj, path):
        with open(path, 'w') as f:
            json.dump(obj, f, sort_keys=True, indent=1)
            f.write('\n')

    @classmethod
    def start(cls, args):
        try:
            task = cls(args)
            task.config.validate()
            with Timer(cls.command, enable=hparams.get('profile', False)):
                return task.run()
        except INVALID_INPUT as e:
            logger.error(f'| invalid input: {e}')
            return EXIT_INVALID
        except ConsistencyError as e:
            logger.error(f'| internal consistency check failed: {e}')
            return EXIT_VERIFICATION
        except BudgetExceededError as e:
            logger.error(f'| {e}')
            return EXIT_BUDGET
        except NonConvergenceError as e:
            logger.error(f'| {e}')
            return EXIT_NONCONVERGENCE
        except SandwichViolationError as e:
            logger.error(f'| sandwich violation: {e}')
            return EXIT_SANDWICH
