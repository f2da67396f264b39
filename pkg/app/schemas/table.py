"""
Convergence table and run report schemas.

Every experiment returns a ``ConvergenceTable``; runs wrap it in a
``RunReport`` together with the configuration echo.
"""

from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator


class ConvergenceTable(BaseModel):
    """
    Ordered (parameter, values...) rows emitted by an experiment.

    Attributes:
        columns: Column names; the first column is the row parameter
        rows: Table rows, one float per column
        metadata: Metric, spec, provider, truncation radius and similar run facts
    """
    columns: List[str]
    rows: List[List[float]] = Field(default_factory=list)
    metadata: Dict[str, str] = Field(default_factory=dict)
    monotone_parameter: bool = True

    @model_validator(mode="after")
    def check_rows(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row} does not match columns {self.columns}")
        if self.monotone_parameter and len(self.rows) > 1:
            steps = np.diff([row[0] for row in self.rows])
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise ValueError("table parameters must be strictly monotone")
        return self

    def column(self, name: str) -> List[float]:
        """Values of column ``name`` in row order."""
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


class RunReport(BaseModel):
    """
    Outcome of one configured run.

    Attributes:
        experiment: Experiment name
        config_echo: Flat key = value pairs reproducing the run
        wall_time: Seconds spent computing
        quadrature_floor: Estimated quadrature floor of the table values
        table: Result table
        output_path: CSV path when the run wrote one
    """
    experiment: str
    config_echo: Dict[str, str]
    wall_time: float = Field(..., ge=0)
    quadrature_floor: Optional[float] = None
    table: ConvergenceTable
    output_path: Optional[str] = None
