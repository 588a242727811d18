import logging
import os

import yaml

DEFAULT_CONFIG = 'egs/config.yaml'

hparams = {}


def override_config(old_config: dict, new_config: dict):
    for k, v in new_config.items():
        if isinstance(v, dict) and k in old_config:
            override_config(old_config[k], new_config[k])
        else:
            old_config[k] = v


def load_config(config_fn, loaded_config=None, config_chains=None):
    # depth first inheritance, each file visited once
    loaded_config = set() if loaded_config is None else loaded_config
    config_chains = [] if config_chains is None else config_chains
    if not os.path.exists(config_fn):
        return {}
    with open(config_fn) as f:
        hparams_ = yaml.safe_load(f) or {}
    loaded_config.add(config_fn)
    if 'base_config' in hparams_:
        ret_hparams = {}
        base_configs = hparams_.pop('base_config')
        if not isinstance(base_configs, list):
            base_configs = [base_configs]
        for c in base_configs:
            if c.startswith('.'):
                c = os.path.normpath(f'{os.path.dirname(config_fn)}/{c}')
            if c not in loaded_config:
                override_config(ret_hparams, load_config(c, loaded_config, config_chains))
        override_config(ret_hparams, hparams_)
    else:
        ret_hparams = hparams_
    config_chains.append(config_fn)
    return ret_hparams


def apply_overrides(hparams_: dict, hparams_str: str):
    """Command line overrides, e.g. ``-hp "tol=1e-10,max_iter=500"``."""
    if hparams_str == '':
        return hparams_
    for new_hparam in hparams_str.split(","):
        k, v = new_hparam.split("=", 1)
        v = v.strip("\'\" ")
        config_node = hparams_
        for k_ in k.strip().split(".")[:-1]:
            config_node = config_node.setdefault(k_, {})
        k = k.strip().split(".")[-1]
        old = config_node.get(k)
        if old is None or isinstance(old, (bool, list, dict)):
            config_node[k] = yaml.safe_load(v)
        else:
            config_node[k] = type(old)(v)
    return hparams_


def set_hparams(config='', hparams_str='', print_hparams=False, global_hparams=True):
    if config == '':
        config = DEFAULT_CONFIG
    if not os.path.exists(config):
        raise FileNotFoundError(f"config not found: {config}")
    config_chains = []
    hparams_ = load_config(config, config_chains=config_chains)
    apply_overrides(hparams_, hparams_str)
    if global_hparams:
        hparams.clear()
        hparams.update(hparams_)
    if print_hparams:
        logging.info(f'| Hparams chains: {config_chains}')
        for k, v in sorted(hparams_.items()):
            logging.info(f'| {k}: {v}')
    return hparams_
