import json
import logging
import os

import duckdb
import pandas as pd

logger = logging.getLogger(__name__)


class RunArchive:
    """
    Manages a DuckDB archive of simulation runs.

    Each run stores one row in ``runs`` (kind, parameter echo, column order) and its
    numeric table in long format in ``run_values``.
    """

    def __init__(self, db_path: str = 'data/heatflow.duckdb'):
        """
        Initialize the archive.

        Args:
            db_path: Path to DuckDB file
        """
        self.db_path = db_path
        directory = os.path.dirname(db_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.conn = duckdb.connect(db_path)

    def initialize_schema(self):
        """Create all necessary tables if they don't exist."""

        # Runs table - one row per archived run
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                run_id VARCHAR PRIMARY KEY,
                kind VARCHAR,
                params_json VARCHAR,
                columns_json VARCHAR,
                n_rows INTEGER,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)

        # Run values - numeric table cells in long format
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS run_values (
                run_id VARCHAR,
                row_idx INTEGER,
                column_name VARCHAR,
                value DOUBLE,
                FOREIGN KEY(run_id) REFERENCES runs(run_id)
            )
        """)

    def save_run(self, run_id: str, kind: str, params: dict, frame: pd.DataFrame):
        """
        Save a run to the archive.

        Args:
            run_id: Unique run ID
            kind: Subcommand or scenario kind
            params: Parameter echo (JSON-serializable)
            frame: Result table; non-numeric columns are skipped, booleans stored as 0/1
        """
        numeric = frame.select_dtypes(include=["number", "bool"]).astype(float)
        self.conn.execute(
            """
            INSERT INTO runs (run_id, kind, params_json, columns_json, n_rows)
            VALUES (?, ?, ?, ?, ?)
            """,
            [run_id, kind, json.dumps(params, sort_keys=True),
             json.dumps(list(numeric.columns)), len(numeric)],
        )

        long_values = (
            numeric.reset_index(drop=True)
            .rename_axis("row_idx")
            .reset_index()
            .melt(id_vars="row_idx", var_name="column_name", value_name="value")
        )
        long_values.insert(0, "run_id", run_id)
        self.conn.register('values_temp', long_values)
        self.conn.execute("""
            INSERT INTO run_values
            SELECT run_id, row_idx, column_name, value FROM values_temp
        """)
        self.conn.unregister('values_temp')
        logger.info("archived run %s (%s, %d rows)", run_id, kind, len(numeric))

    def query_run_history(self, limit: int = 10) -> pd.DataFrame:
        """Get recent runs."""
        return self.conn.execute("""
            SELECT run_id, kind, n_rows, created_at
            FROM runs
            ORDER BY created_at DESC
            LIMIT ?
        """, [limit]).df()

    def query_run(self, run_id: str) -> pd.DataFrame:
        """
        Retrieve an archived table by run_id.

        Args:
            run_id: Unique run ID

        Returns:
            Wide DataFrame with the original numeric columns in their original order
        """
        meta = self.conn.execute(
            "SELECT columns_json FROM runs WHERE run_id = ?", [run_id]
        ).fetchone()
        if meta is None:
            raise KeyError(f"no archived run '{run_id}'")
        columns = json.loads(meta[0])
        long_values = self.conn.execute("""
            SELECT row_idx, column_name, value
            FROM run_values
            WHERE run_id = ?
            ORDER BY row_idx
        """, [run_id]).df()
        if long_values.empty:
            return pd.DataFrame(columns=columns)
        wide = long_values.pivot(index="row_idx", columns="column_name", values="value")
        return wide[columns].reset_index(drop=True).rename_axis(None, axis=1)

    def close(self):
        """Close database connection."""
        self.conn.close()
