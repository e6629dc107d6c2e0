"""
Parameter resolution for the CLI: flag > config file > preset > default.
"""

import argparse
import sys
from typing import Any, Optional, TextIO, Union

from ..data.models import McConfig
from ..data.presets import get_preset, load_config_file, mc_config_from, merge_layers


class Settings:
    """Merged config sections plus the parsed command-line flags."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        layers = []
        if getattr(args, 'preset', None):
            layers.append(get_preset(args.preset))
        if getattr(args, 'config', None):
            layers.append(load_config_file(args.config))
        self.sections = merge_layers(*layers)

    def get(self, section: str, key: str, flag_value: Any = None, default: Any = None) -> Any:
        if flag_value is not None:
            return flag_value
        return self.sections[section].get(key, default)

    def mc(self, default_draws: Optional[int] = None) -> McConfig:
        """McConfig from flags over the "mc" section; default_draws applies when neither sets a count."""
        args = self.args
        section = dict(self.sections['mc'])
        if default_draws is not None and 'n_draws' not in section:
            section['n_draws'] = default_draws
        return mc_config_from(
            section,
            n_draws=args.draws,
            n_workers=args.workers,
            base_seed=args.seed,
            alpha=args.alpha,
            tail=args.tail,
            chunk_size=args.chunk_size,
            executor=args.executor
        )

    def reps(self, section: str, default: int) -> int:
        return int(self.get(section, 'n_reps', self.args.reps, default))

    @property
    def output(self) -> Union[str, TextIO]:
        return self.args.out or sys.stdout

    @property
    def format(self) -> str:
        return self.args.format or 'csv'
