from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Optional

from dynmix.errors import ConfigurationError
from dynmix.models import PRIOR_KEYS, FitConfig, RunManifest
from dynmix.services.diagnostics import DEFAULT_MASS


class ConfigService:
    DEFAULT_CONFIG = FitConfig().to_dict()
    MANIFEST_NAME = "manifest.json"
    # Output options of `fit`; they never reach the sampler.
    RUN_OPTION_KEYS = ("mass", "full_draws", "chains")

    def __init__(self, base_dir: Path):
        self.base_dir = Path(base_dir)
        self.manifest_path = self.base_dir / self.MANIFEST_NAME

    def _load_json_file(self, path: Path) -> Dict[str, Any]:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"configuration file not found: {path}") from None
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read configuration file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"configuration file {path} must hold a JSON object")
        return data

    def _load_optional_json(self, path: Optional[Path]) -> Dict[str, Any]:
        if path is None:
            return {}
        return self._load_json_file(path)

    def _write_json_file(self, path: Path, payload: Dict[str, Any]) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        temp_path = path.with_suffix(path.suffix + ".tmp")
        temp_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        temp_path.replace(path)

    @staticmethod
    def _unwrap_manifest(data: Dict[str, Any]) -> Dict[str, Any]:
        """A run manifest nests the fit configuration under ``config``."""
        nested = data.get("config")
        if "command" in data and isinstance(nested, dict):
            return nested
        return data

    def load_fit_config(
        self,
        config_path: Optional[Path] = None,
        priors_path: Optional[Path] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> FitConfig:
        """Resolve a FitConfig from defaults, a config or manifest file, a priors file and flags.

        Later sources win; ``None`` overrides are ignored so unset flags keep file values.
        """
        file_config = self._unwrap_manifest(self._load_optional_json(config_path))
        file_config = {key: value for key, value in file_config.items() if key not in self.RUN_OPTION_KEYS}
        priors_file = self._load_optional_json(priors_path)
        safe_overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
        merged = {**self.DEFAULT_CONFIG, **file_config, **safe_overrides}
        merged["priors"] = self._merge_priors(file_config, priors_file)
        unknown = sorted(set(merged) - set(self.DEFAULT_CONFIG))
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
        return FitConfig.from_dict(merged)

    def load_run_options(
        self,
        config_path: Optional[Path] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """Resolve mass, full_draws and chains; flags win over the file, which wins over defaults."""
        file_config = self._unwrap_manifest(self._load_optional_json(config_path))
        options = {"mass": DEFAULT_MASS, "full_draws": False, "chains": 1}
        options.update({key: file_config[key] for key in self.RUN_OPTION_KEYS if key in file_config})
        options.update({key: value for key, value in (overrides or {}).items() if value is not None})
        unknown = sorted(set(options) - set(self.RUN_OPTION_KEYS))
        if unknown:
            raise ConfigurationError(f"unknown run options: {', '.join(unknown)}")
        try:
            mass = float(options["mass"])
            chains = options["chains"]
            full_draws = options["full_draws"]
        except (TypeError, ValueError):
            raise ConfigurationError(f"invalid run options: {options}") from None
        if not isinstance(full_draws, bool) or isinstance(chains, bool) or not isinstance(chains, int):
            raise ConfigurationError(f"invalid run options: {options}")
        return {"mass": mass, "full_draws": full_draws, "chains": chains}

    def _merge_priors(self, config: Dict[str, Any], priors_file: Dict[str, Any]) -> Dict[str, Any]:
        config_priors = config.get("priors", {})
        if not isinstance(config_priors, dict):
            raise ConfigurationError("'priors' must be an object of prior hyperparameters")
        nested = priors_file.get("priors") if isinstance(priors_file.get("priors"), dict) else priors_file
        merged = {**config_priors, **nested}
        unknown = sorted(set(merged) - set(PRIOR_KEYS))
        if unknown:
            raise ConfigurationError(f"unknown prior hyperparameters: {', '.join(unknown)}")
        return merged

    def save_manifest(self, manifest: RunManifest) -> Path:
        self._write_json_file(self.manifest_path, manifest.to_dict())
        return self.manifest_path

    def load_manifest(self) -> Dict[str, Any]:
        return self._load_json_file(self.manifest_path)
