import logging
import time


class Timer:
    timer_map = {}

    def __init__(self, name, enable=False):
        if name not in Timer.timer_map:
            Timer.timer_map[name] = 0
        self.name = name
        self.enable = enable

    def __enter__(self):
        if self.enable:
            self.t = time.time()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.enable:
            Timer.timer_map[self.name] += time.time() - self.t
            logging.info(f'[Timer] {self.name}: {Timer.timer_map[self.name]:.3f}s')
