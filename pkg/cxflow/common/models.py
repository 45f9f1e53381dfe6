import pprint

from pydantic import BaseModel, ConfigDict


class ValidateBaseModel(BaseModel, validate_assignment=True):
    """Re-validates fields on assignment, so a config edited after parsing stays within its bounds."""

    def __repr__(self):
        return pprint.pformat(self.model_dump(), indent=4)


class ConfigModel(ValidateBaseModel):
    """Base model for every section of a scenario or learning config; unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid")
