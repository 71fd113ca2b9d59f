import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Any

import yaml


class BaseService:
    """基础服务类，提供结果文件的原子写入方法"""

    def write_text(self, path: Path, text: str) -> Path:
        """先写入同目录下的临时文件，再整体替换目标文件

        Args:
            path: 目标文件路径
            text: 文件内容

        Returns:
            Path: 写入完成的文件路径

        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return path

    def write_yaml(self, path: Path, data: Any) -> Path:
        """写入YAML文件，键顺序保持插入顺序"""
        return self.write_text(path, yaml.safe_dump(data, allow_unicode=True, sort_keys=False))

    def write_rows(self, path: Path, rows: list[list[str]]) -> Path:
        """写入逗号分隔的列式文本"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerows(rows)
        return self.write_text(path, buffer.getvalue())
