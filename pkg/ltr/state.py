import threading

cancel_event: threading.Event = threading.Event()


def request_cancel() -> None:
    cancel_event.set()


def reset() -> None:
    cancel_event.clear()
