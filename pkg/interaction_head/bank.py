"""Context-aware memory bank of enhanced actor features.

Entries are keyed by (video, clip second). A query at time t returns the
entries of the same video within half a window of t, excluding t itself.
Writers hold a lock per update, readers copy under the same lock and may
see features from an earlier pass.
"""
import json
import logging
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from django.utils.text import slugify

from tensor_core.exceptions import DimensionError, FormatError, ParameterError
from tensor_core.serialization import read_array, write_array
from tensor_core.tensor import Tensor, default_dtype

logger = logging.getLogger(__name__)

INDEX_FILE = "index.json"
RECORD_HEADER = struct.Struct("<II")
U32_MAX = 2 ** 32 - 1
BANK_SUFFIX = ".bank"


def default_window_s() -> int:
    return settings.ACTION_HEAD.get("BANK_WINDOW_S", 60)


@dataclass(frozen=True)
class BankEntry:
    video_id: str
    clip_time_s: int
    actor_id: int
    feature: Tensor

    @property
    def payload_size(self) -> int:
        return self.feature.data.size


class MemoryBank:
    def __init__(self, channels: int, window_s: int = None):
        self.channels = channels
        self.window_s = default_window_s() if window_s is None else window_s
        self.entries: Dict[Tuple[str, int], List[BankEntry]] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        with self._lock:
            return sum(len(items) for items in self.entries.values())

    def keys(self) -> List[Tuple[str, int]]:
        with self._lock:
            return sorted(self.entries)

    def update(
        self,
        video_id: str,
        clip_time_s: int,
        enhanced: Union[Tensor, np.ndarray],
        actor_ids: Sequence[int],
    ) -> None:
        """Replace everything stored for (video, time) with detached rows."""
        values = enhanced.data if isinstance(enhanced, Tensor) else enhanced
        values = np.asarray(values)
        if values.ndim != 2 or values.shape[1] != self.channels:
            raise DimensionError(
                f"bank stores {self.channels}-d actor features, "
                f"got {values.shape}"
            )
        if values.shape[0] != len(actor_ids):
            raise DimensionError(
                f"{values.shape[0]} features for {len(actor_ids)} actor ids"
            )
        for name, value in [("clip time", clip_time_s)] + [
            ("actor id", actor_id) for actor_id in actor_ids
        ]:
            if not 0 <= int(value) <= U32_MAX:
                raise ParameterError(f"{name} {value} outside the u32 range")
        rows = [
            BankEntry(
                video_id=video_id,
                clip_time_s=int(clip_time_s),
                actor_id=int(actor_id),
                feature=Tensor(values[row].copy()),
            )
            for row, actor_id in enumerate(actor_ids)
        ]
        with self._lock:
            self.entries[(video_id, int(clip_time_s))] = rows

    def query(self, video_id: str, clip_time_s: int) -> List[BankEntry]:
        half = self.window_s / 2
        with self._lock:
            hits = [
                (time, entries)
                for (video, time), entries in self.entries.items()
                if video == video_id
                and time != clip_time_s
                and abs(time - clip_time_s) <= half
            ]
        return [entry for _, entries in sorted(hits) for entry in entries]

    def features(self, video_id: str, clip_time_s: int) -> Tensor:
        """M x c neighbour features; M may be zero."""
        entries = self.query(video_id, clip_time_s)
        if not entries:
            return Tensor(np.zeros((0, self.channels), dtype=default_dtype()))
        return Tensor(
            np.stack([entry.feature.data for entry in entries]).astype(
                default_dtype(), copy=False
            )
        )

    def save(self, directory: Union[str, Path]) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with self._lock:
            snapshot = {key: list(rows) for key, rows in self.entries.items()}
        videos: Dict[str, List[BankEntry]] = {}
        for (video_id, _), rows in sorted(snapshot.items()):
            videos.setdefault(video_id, []).extend(rows)

        files, used = {}, set()
        for video_id, rows in videos.items():
            name = slugify(video_id) or "video"
            candidate, suffix = name, 1
            while candidate in used:
                suffix += 1
                candidate = f"{name}-{suffix}"
            used.add(candidate)
            files[video_id] = candidate + BANK_SUFFIX
            with open(directory / files[video_id], "wb") as stream:
                for entry in rows:
                    stream.write(
                        RECORD_HEADER.pack(entry.clip_time_s, entry.actor_id)
                    )
                    write_array(stream, entry.feature.data)
        index = {
            "channels": self.channels,
            "window_s": self.window_s,
            "videos": files,
        }
        with open(directory / INDEX_FILE, "w") as stream:
            json.dump(index, stream, indent=2)
        logger.info(
            "saved %d bank entries for %d videos to %s",
            sum(len(rows) for rows in videos.values()),
            len(videos),
            directory,
        )
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "MemoryBank":
        directory = Path(directory)
        try:
            with open(directory / INDEX_FILE) as stream:
                index = json.load(stream)
        except FileNotFoundError as error:
            raise FormatError(f"no bank index in {directory}") from error
        bank = cls(index["channels"], index["window_s"])
        for video_id, filename in index["videos"].items():
            grouped: Dict[int, List[Tuple[int, np.ndarray]]] = {}
            with open(directory / filename, "rb") as stream:
                while True:
                    header = stream.read(RECORD_HEADER.size)
                    if not header:
                        break
                    if len(header) != RECORD_HEADER.size:
                        raise FormatError(f"truncated bank record in {filename}")
                    clip_time_s, actor_id = RECORD_HEADER.unpack(header)
                    feature = read_array(stream)
                    grouped.setdefault(clip_time_s, []).append(
                        (actor_id, feature)
                    )
            for clip_time_s, rows in grouped.items():
                bank.entries[(video_id, clip_time_s)] = [
                    BankEntry(video_id, clip_time_s, actor_id, Tensor(feature))
                    for actor_id, feature in rows
                ]
        logger.info("loaded %d bank entries from %s", len(bank), directory)
        return bank
