import logging
import re
from pathlib import Path
from typing import List


class LogCleaner:
    """Utility class for cleaning up old run logs"""

    def __init__(self, logs_dir, max_logs_to_keep: int = 5):
        """
        Args:
            logs_dir: Path to the logs directory
            max_logs_to_keep: Maximum number of log files to keep
        """
        self.logs_dir = Path(logs_dir)
        self.max_logs_to_keep = max_logs_to_keep
        self.log_pattern = re.compile(r'ensemble-gp_(\d{8}_\d{6})\.log')

    def get_log_files(self) -> List[Path]:
        """Run logs in the logs directory, newest first (by the timestamp in the name)."""
        if not self.logs_dir.exists():
            return []

        log_files = [p for p in self.logs_dir.iterdir()
                     if p.is_file() and self.log_pattern.match(p.name)]
        log_files.sort(key=lambda p: (self.log_pattern.match(p.name).group(1), p.stat().st_mtime),
                       reverse=True)
        return log_files

    def clean_old_logs(self, exclude_current: bool = False) -> dict:
        """
        Remove all but the most recent logs

        Args:
            exclude_current: If True, reserve one slot for the log of the current run

        Returns:
            Dictionary with cleanup results
        """
        log_files = self.get_log_files()
        if not log_files:
            return {"cleaned_count": 0, "total_files": 0, "message": "No log files found"}

        keep_count = self.max_logs_to_keep - (1 if exclude_current else 0)
        keep_count = max(keep_count, 0)
        files_to_keep = log_files[:keep_count]

        cleaned_files = []
        for file_path in log_files[keep_count:]:
            try:
                file_path.unlink()
                cleaned_files.append(file_path.name)
            except OSError as e:
                logging.warning(f"Failed to delete log file {file_path.name}: {e}")

        if cleaned_files:
            logging.info(f"Log cleanup completed: removed {len(cleaned_files)} old log files")

        return {
            "cleaned_count": len(cleaned_files),
            "total_files": len(log_files),
            "files_kept": len(files_to_keep),
            "files_cleaned": cleaned_files,
            "message": f"Kept {len(files_to_keep)} most recent log files, removed {len(cleaned_files)} old files",
        }


def cleanup_logs(logs_dir, max_logs_to_keep: int = 5, exclude_current: bool = False) -> dict:
    """Convenience wrapper around LogCleaner.clean_old_logs"""
    return LogCleaner(logs_dir, max_logs_to_keep).clean_old_logs(exclude_current=exclude_current)
