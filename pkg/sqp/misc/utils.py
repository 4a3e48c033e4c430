import hashlib
import os
from typing import List, Optional, Union

from sqp.constants import ENV_SEED
from sqp.exceptions.sqp_exceptions import ConfigurationException


def as_list(input_str: str) -> List[str]:
    return [item.strip() for item in input_str.split(",") if item.strip()]


def as_int_list(input_str: str) -> List[int]:
    return [int(item) for item in as_list(input_str)]


def as_bool(input_str: Union[str, None]) -> bool:
    return input_str is not None and input_str.lower() == "true"


def as_optional_float(input_str: Union[str, None]) -> Optional[float]:
    if input_str is None or input_str.strip() in ("", "none"):
        return None
    return float(input_str)


def resolve_seed(flag: Optional[int], configured: Union[str, int, None]) -> int:
    """--seed wins, then the SQP_SEED environment variable, then the config."""
    if flag is not None:
        return flag
    for source, value in ((ENV_SEED, os.environ.get(ENV_SEED)), ("[app] seed", configured)):
        if value is None or str(value).strip() == "":
            continue
        try:
            return int(value)
        except ValueError as exception:
            raise ConfigurationException(
                error_description=f"{source} must be an integer, got {value!r}"
            ) from exception
    return 0


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
