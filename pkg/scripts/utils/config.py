"""
Runtime configuration.
Loads .env values and exposes the size caps and defaults used across fedocheck.
"""

import os
from dataclasses import dataclass, field
from typing import Optional

DEFAULT_SEED = 20240601


def initialize_environment():
    """
    Initialize environment by loading variables from .env file.

    This should be called at the start of scripts that need environment variables.
    """
    from dotenv import load_dotenv
    load_dotenv()


@dataclass(frozen=True)
class Settings:
    """Caps and defaults. CLI flags override env, env overrides these defaults."""
    seed: int = DEFAULT_SEED
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    log_level: str = 'INFO'
    max_matching_order: int = 12       # N
    max_matching_dim: int = 8          # 2n for evaluation matrices
    max_normal_order: int = 3          # m for N_m
    max_normal_dim: int = 8
    max_degree: int = 3                # polynomial Fedosov structures
    max_dense_scalars: int = 10 ** 8
    sample_factor: Optional[int] = None  # None: adaptive sample count


def load_settings(seed: Optional[int] = None, threads: Optional[int] = None) -> Settings:
    """
    Build Settings from the environment.

    Args:
        seed: explicit seed (wins over FEDOCHECK_SEED)
        threads: explicit worker count (wins over FEDOCHECK_THREADS)

    Returns:
        Settings instance
    """
    env_seed = os.getenv('FEDOCHECK_SEED')
    env_threads = os.getenv('FEDOCHECK_THREADS')
    kwargs = {}
    if seed is not None:
        kwargs['seed'] = int(seed)
    elif env_seed:
        kwargs['seed'] = int(env_seed)
    if threads is not None:
        kwargs['threads'] = max(1, int(threads))
    elif env_threads:
        kwargs['threads'] = max(1, int(env_threads))
    kwargs['log_level'] = os.getenv('FEDOCHECK_LOG_LEVEL', 'INFO').upper()
    return Settings(**kwargs)
