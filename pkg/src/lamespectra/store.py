import logging
import os
import threading
from abc import ABC, abstractmethod

from . import utils


class AbstractStore(ABC):
    def __init__(self, **kwargs):
        self.files = []

    @abstractmethod
    def setup(self, **kwargs):
        pass

    @abstractmethod
    def add_json(self, name: str, content, **kwargs):
        pass

    @abstractmethod
    def add_csv(self, name: str, df, **kwargs):
        pass

    @abstractmethod
    def add_text(self, name: str, text: str, **kwargs):
        pass

    @abstractmethod
    def list_files(self, **kwargs):
        pass

    @abstractmethod
    def path(self, name: str, **kwargs):
        pass


class FileStore(AbstractStore):
    """output files under one directory; names are relative to it"""

    def __init__(self, outdir: str, overwrite: bool = True, **kwargs):
        super().__init__(**kwargs)
        self.outdir = outdir
        self.overwrite = overwrite
        self.setup()

    def setup(self, **kwargs):
        if os.path.exists(self.outdir) and not os.path.isdir(self.outdir):
            raise NotADirectoryError(f'output path {self.outdir} is not a directory')
        os.makedirs(self.outdir, exist_ok=True)
        logging.debug(f'writing outputs to {self.outdir}')

    def path(self, name: str, **kwargs):
        return os.path.join(self.outdir, name)

    def _register(self, name):
        target = self.path(name)
        if os.path.exists(target) and not self.overwrite:
            raise FileExistsError(f'{target} exists and overwrite is off')
        if name not in self.files:
            self.files.append(name)
        return target

    def add_json(self, name: str, content, **kwargs):
        utils.write_json(content, self._register(name))

    def add_csv(self, name: str, df, **kwargs):
        utils.write_csv(df, self._register(name))

    def add_text(self, name: str, text: str, **kwargs):
        target = self._register(name)
        os.makedirs(os.path.dirname(os.path.abspath(target)), exist_ok=True)
        with open(target, 'w') as f:
            f.write(text)

    def list_files(self, **kwargs):
        return list(self.files)


# dependency inversion; a single lock serializes writes from worker threads
class OutputStore:
    def __init__(self, store: AbstractStore, **kwargs):
        super().__init__(**kwargs)
        self.store = store
        self._lock = threading.Lock()

    def add_json(self, name: str, content, **kwargs):
        with self._lock:
            self.store.add_json(name, content, **kwargs)
        logging.info(f'wrote {name}')

    def add_csv(self, name: str, df, **kwargs):
        with self._lock:
            self.store.add_csv(name, df, **kwargs)
        logging.info(f'wrote {name}')

    def add_text(self, name: str, text: str, **kwargs):
        with self._lock:
            self.store.add_text(name, text, **kwargs)
        logging.info(f'wrote {name}')

    def list_files(self, **kwargs):
        with self._lock:
            return self.store.list_files(**kwargs)

    def path(self, name: str, **kwargs):
        return self.store.path(name, **kwargs)

    def missing_or_empty(self):
        """listed files that do not exist or have no content"""
        return [
            name
            for name in self.list_files()
            if not os.path.exists(self.path(name)) or os.path.getsize(self.path(name)) == 0
        ]
