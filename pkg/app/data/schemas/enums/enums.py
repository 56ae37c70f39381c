import enum


class Provenance(str, enum.Enum):
    Plugin = 'plugin'
    Oracle = 'oracle'


class CoverageTarget(str, enum.Enum):
    Factor = 'factor'
    Entry = 'entry'


class StepRule(str, enum.Enum):
    Constant = 'constant'
    Calibrated = 'calibrated'
