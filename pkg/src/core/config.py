"""Configuration management for the Posterior Fusion Toolkit."""

import os
import yaml
from pathlib import Path
from typing import Optional, Dict, Any, List
from dataclasses import dataclass, field

from .constants import (
    DEFAULT_BATCH_SIZE, DEFAULT_HIDDEN_DIMS, DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE, DEFAULT_TARGET_SHARE,
    DEFAULT_TEMPERATURE, DEFAULT_TOPN, DEFAULT_DEV_FRACTION,
)
from .exceptions import ConfigurationError, FileAccessError


@dataclass
class TrainingDefaults:
    """Default mapping network training settings."""
    hidden_dims: List[int] = field(default_factory=lambda: list(DEFAULT_HIDDEN_DIMS))
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    max_epochs: int = DEFAULT_MAX_EPOCHS
    patience: int = DEFAULT_PATIENCE
    dev_fraction: float = DEFAULT_DEV_FRACTION


@dataclass
class FusionDefaults:
    """Default weight derivation settings."""
    temperature: float = DEFAULT_TEMPERATURE
    target_share: float = DEFAULT_TARGET_SHARE


@dataclass
class AppConfig:
    """Application configuration."""
    debug: bool = False
    log_level: str = "INFO"
    log_file: Optional[str] = None
    seed: int = 0

    training: TrainingDefaults = field(default_factory=TrainingDefaults)
    fusion: FusionDefaults = field(default_factory=FusionDefaults)
    topn: List[int] = field(default_factory=lambda: list(DEFAULT_TOPN))


class ConfigManager:
    """Manages application configuration."""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or self._get_default_config_path()
        self._config: Optional[AppConfig] = None

    def _get_default_config_path(self) -> str:
        """Get default configuration file path."""
        env_path = os.environ.get("PFUSION_CONFIG")
        if env_path:
            return env_path
        return os.path.join(Path(__file__).parent.parent.parent, "config", "settings.yaml")

    def load_config(self) -> AppConfig:
        """Load configuration from file, creating defaults when missing."""
        if self._config is not None:
            return self._config

        if not os.path.exists(self.config_path):
            self._create_default_config()

        data = load_yaml(self.config_path)

        training = data.get('training', {}) or {}
        fusion = data.get('fusion', {}) or {}
        try:
            self._config = AppConfig(
                debug=bool(data.get('debug', False)),
                log_level=str(data.get('log_level', 'INFO')),
                log_file=data.get('log_file'),
                seed=int(data.get('seed', 0)),
                training=TrainingDefaults(
                    hidden_dims=[int(h) for h in training.get('hidden_dims', DEFAULT_HIDDEN_DIMS)],
                    learning_rate=float(training.get('learning_rate', DEFAULT_LEARNING_RATE)),
                    batch_size=int(training.get('batch_size', DEFAULT_BATCH_SIZE)),
                    max_epochs=int(training.get('max_epochs', DEFAULT_MAX_EPOCHS)),
                    patience=int(training.get('patience', DEFAULT_PATIENCE)),
                    dev_fraction=float(training.get('dev_fraction', DEFAULT_DEV_FRACTION)),
                ),
                fusion=FusionDefaults(
                    temperature=float(fusion.get('temperature', DEFAULT_TEMPERATURE)),
                    target_share=float(fusion.get('target_share', DEFAULT_TARGET_SHARE)),
                ),
                topn=[int(n) for n in data.get('topn', DEFAULT_TOPN)],
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid settings in {self.config_path}: {e}")

        return self._config

    def save_config(self, config: AppConfig) -> None:
        """Save configuration to file."""
        data = {
            'debug': config.debug,
            'log_level': config.log_level,
            'log_file': config.log_file,
            'seed': config.seed,
            'training': {
                'hidden_dims': list(config.training.hidden_dims),
                'learning_rate': config.training.learning_rate,
                'batch_size': config.training.batch_size,
                'max_epochs': config.training.max_epochs,
                'patience': config.training.patience,
                'dev_fraction': config.training.dev_fraction,
            },
            'fusion': {
                'temperature': config.fusion.temperature,
                'target_share': config.fusion.target_share,
            },
            'topn': list(config.topn),
        }

        os.makedirs(os.path.dirname(self.config_path) or ".", exist_ok=True)

        with open(self.config_path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(data, f, default_flow_style=False, allow_unicode=True)

        self._config = config

    def _create_default_config(self) -> None:
        """Create default configuration file."""
        self.save_config(AppConfig())


def load_yaml(path: str) -> Dict[str, Any]:
    """Read a YAML mapping, translating failures into toolkit errors."""
    if not os.path.exists(path):
        raise FileAccessError(f"No such file: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must contain a mapping at top level")
    return data


# Global config manager instance
config_manager = ConfigManager()
