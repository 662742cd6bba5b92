"""revbib: collaborative exchange of review/survey article bibliographies."""

__version__ = "0.1.0"
