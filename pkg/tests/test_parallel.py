import threading

from src.parallel import map_points


def test_map_points_keeps_order():
    assert map_points(lambda x: x * x, range(6), workers=3) == [0, 1, 4, 9, 16, 25]
    assert map_points(str, [], workers=2) == []


def test_map_points_serial_stays_on_caller_thread():
    caller = threading.get_ident()
    assert map_points(lambda _: threading.get_ident(), range(4)) == [caller] * 4


def test_map_points_single_item_is_not_threaded():
    caller = threading.get_ident()
    assert map_points(lambda _: threading.get_ident(), [0], workers=4) == [caller]
