import argparse
import importlib
import logging
import os
import sys

os.environ["OMP_NUM_THREADS"] = "1"

from utils.commons.hparams import hparams, set_hparams

TASKS = {
    'construct': 'tasks.equilateral.construct.ConstructTask',
    'polytope': 'tasks.equilateral.polytope.PolytopeTask',
    'perturb': 'tasks.equilateral.perturb.PerturbTask',
    'bounds': 'tasks.equilateral.bounds.BoundsTask',
    'verify': 'tasks.equilateral.verify.VerifyTask',
    'gen': 'tasks.equilateral.gen.GenTask',
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default='', help='location of the data config file')
    common.add_argument('-hp', '--hparams', type=str, default='', help='e.g. "tol=1e-10,max_iter=500"')
    common.add_argument('--out', type=str, default=None, help='output file; default <out_dir>/<input>.<command>.json')
    common.add_argument('--num_workers', type=int, default=None)
    common.add_argument('--seed', type=int, default=None)

    parser = argparse.ArgumentParser(prog='run.py', description='Equilateral sets in subspaces of l_inf^n')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('construct', parents=[common], help='bounds (1)-(3) on a codimension-k subspace')
    p.add_argument('spec', type=str)
    p.add_argument('--bound', choices=['1', '2', '3', 'auto'], default='auto')
    p.add_argument('--ell', type=int, default=None)
    p.add_argument('--enum_budget', type=int, default=None)

    p = sub.add_parser('polytope', parents=[common], help='equilateral set of a polytope in facet form')
    p.add_argument('polytope', type=str)
    p.add_argument('--enum_budget', type=int, default=None)

    p = sub.add_parser('perturb', parents=[common], help='equilateral set in a norm close to a subspace')
    p.add_argument('spec', type=str)
    p.add_argument('norm', type=str)
    p.add_argument('--ell', type=int, default=None)
    p.add_argument('--tol', type=float, default=None)
    p.add_argument('--max_iter', type=int, default=None)
    p.add_argument('--alpha', type=float, default=None)

    p = sub.add_parser('bounds', parents=[common], help='lower bounds for given n and k')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--json', action='store_true')

    p = sub.add_parser('verify', parents=[common], help='re-verify a certificate file')
    p.add_argument('certificate', type=str)
    p.add_argument('--spec', type=str, default=None)

    p = sub.add_parser('gen', parents=[common], help='seeded random input files')
    p.add_argument('kind', choices=['subspace', 'degenerate', 'polytope', 'norm'])
    p.add_argument('--n', type=int, default=None)
    p.add_argument('--k', type=int, default=None)
    p.add_argument('--d', type=int, default=None)
    p.add_argument('--f', type=int, default=None)
    p.add_argument('--c', type=str, default=None)
    p.add_argument('--nonzero', action='store_true')
    return parser


def run_task(args):
    pkg = ".".join(TASKS[args.command].split(".")[:-1])
    cls_name = TASKS[args.command].split(".")[-1]
    task_cls = getattr(importlib.import_module(pkg), cls_name)
    return task_cls.start(args)


def main(argv=None):
    logging.basicConfig(stream=sys.stdout, level=logging.INFO,
                        format='%(asctime)s %(message)s', datefmt='%m/%d %I:%M:%S %p')
    args = build_parser().parse_args(argv)
    try:
        set_hparams(args.config, args.hparams)
    except (FileNotFoundError, ValueError) as e:
        logging.error(f'| bad config: {e}')
        return 2
    if args.num_workers is not None:
        hparams['num_workers'] = args.num_workers
    if args.seed is not None:
        hparams['seed'] = args.seed
    return run_task(args)


if __name__ == '__main__':
    sys.exit(main())
