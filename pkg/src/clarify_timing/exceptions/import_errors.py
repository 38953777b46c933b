"""Errors when importing the optional analysis stack."""


class HarnessImportError(ImportError):
    """Cannot import a package required by an optional part of the harness."""

    ...


class PandasImportError(HarnessImportError):
    """Cannot import pandas for the analysis subpackage."""

    def __init__(self):
        """Cannot import pandas for the analysis subpackage."""
        self.message = (
            "`pandas` must be installed to analyze run archives "
            "(install the `analysis` extra)."
        )
        super().__init__(self.message)


class ScipyImportError(HarnessImportError):
    """Cannot import scipy for the analysis subpackage."""

    def __init__(self):
        """Cannot import scipy for the analysis subpackage."""
        self.message = (
            "`scipy` must be installed to compute rank correlations "
            "(install the `analysis` extra)."
        )
        super().__init__(self.message)
