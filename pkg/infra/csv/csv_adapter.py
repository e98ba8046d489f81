"""
CSV adapter for reading density matrices and writing simulation artifacts
"""
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from config import settings
from domain.entities import FIDSignal, Spectrum
from domain.exceptions import ArtifactError, DimensionMismatchError
from domain.operators import as_matrix

PathLike = Union[str, Path]


def _clean(values: np.ndarray) -> np.ndarray:
    """Map -0.0 to 0.0 so equal numbers print identically"""
    values = np.asarray(values, dtype=float)
    return np.where(values == 0, 0.0, values)


class CsvReader:
    """Reader for matrix and signal CSV files"""

    def read_csv_file(self, file_path: PathLike) -> pd.DataFrame:
        """
        Read a CSV file and return DataFrame with stripped column names
        """
        try:
            df = pd.read_csv(file_path)
        except Exception as e:
            raise ArtifactError(f"Error reading CSV file {file_path}: {e}") from e
        df.columns = [str(col).strip() for col in df.columns]
        return df

    def read_matrix(self, file_path: PathLike) -> np.ndarray:
        """
        Read a complex matrix written as row,col,re,im records
        """
        df = self.read_csv_file(file_path)
        missing = [c for c in settings.MATRIX_COLUMNS if c not in df.columns]
        if missing:
            raise ArtifactError(f"{file_path}: missing columns {', '.join(missing)}")

        rows = df["row"].astype(int).to_numpy()
        cols = df["col"].astype(int).to_numpy()
        if rows.size == 0 or rows.min() < 0 or cols.min() < 0:
            raise ArtifactError(f"{file_path}: empty matrix or negative indices")
        dim = int(max(rows.max(), cols.max())) + 1

        M = np.zeros((dim, dim), dtype=complex)
        M[rows, cols] = df["re"].to_numpy(dtype=float) + 1j * df["im"].to_numpy(dtype=float)
        return M

    def read_spectrum(self, file_path: PathLike) -> Spectrum:
        df = self.read_csv_file(file_path)
        return Spectrum(df["freq_MHz"].to_numpy(), df["re"].to_numpy() + 1j * df["im"].to_numpy())


class CsvWriter:
    """Writer for the artifacts of a run, 12 significant digits"""

    def __init__(self, float_format: Optional[str] = None):
        self.float_format = float_format or settings.FLOAT_FORMAT

    def _save(self, df: pd.DataFrame, output_path: PathLike) -> str:
        output_path = Path(output_path)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            df.to_csv(output_path, index=False, float_format=self.float_format, lineterminator="\n")
        except OSError as e:
            raise ArtifactError(f"Error writing {output_path}: {e}") from e
        return str(output_path)

    def write_matrix(self, M, output_path: PathLike) -> str:
        """
        Write a complex matrix row-major as row,col,re,im
        """
        A = as_matrix(M)
        dim = A.shape[0]
        rows, cols = np.divmod(np.arange(dim * dim), dim)
        df = pd.DataFrame({
            "row": rows,
            "col": cols,
            "re": _clean(A.real.ravel()),
            "im": _clean(A.imag.ravel()),
        }, columns=settings.MATRIX_COLUMNS)
        return self._save(df, output_path)

    def write_fid(self, fid: FIDSignal, output_path: PathLike) -> str:
        df = pd.DataFrame({
            "time_us": _clean(fid.times),
            "re": _clean(fid.samples.real),
            "im": _clean(fid.samples.imag),
        }, columns=settings.FID_COLUMNS)
        return self._save(df, output_path)

    def write_spectrum(self, spectra: List[Spectrum], output_path: PathLike) -> str:
        """
        Write one or more frequency windows as freq_MHz,re,im,abs, frequency ascending
        """
        if not spectra:
            raise DimensionMismatchError("No spectrum to write")
        ordered = sorted(spectra, key=lambda s: s.frequencies[0])
        freqs = np.concatenate([s.frequencies for s in ordered])
        amps = np.concatenate([s.amplitudes for s in ordered])
        df = pd.DataFrame({
            "freq_MHz": _clean(freqs),
            "re": _clean(amps.real),
            "im": _clean(amps.imag),
            "abs": _clean(np.abs(amps)),
        }, columns=settings.SPECTRUM_COLUMNS)
        return self._save(df, output_path)

    def write_report(self, text: str, output_path: PathLike) -> str:
        output_path = Path(output_path)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            output_path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"Error writing {output_path}: {e}") from e
        return str(output_path)
