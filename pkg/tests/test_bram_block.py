import random

import pytest

from bramac.bram_block import (
    CIM_TRIGGER_ADDR,
    CimAddress,
    MainArray,
    Mode,
    PortOp,
    StaleCopyWarning,
    WORDS,
    load_tile_bin,
    load_tile_hex,
    save_tile_bin,
    save_tile_hex,
)


def test_word_address_mapping():
    for w in (0, 1, 3, 4, 255, 511):
        a = CimAddress.from_word(w)
        assert (a.row, a.col) == (w >> 2, w & 3)
        assert a.word == w
    with pytest.raises(ValueError):
        CimAddress.from_word(512)
    with pytest.raises(ValueError):
        CimAddress(128, 0)


def test_compute_trigger_address():
    assert CIM_TRIGGER_ADDR == 0xFFF
    assert MainArray.is_cim_trigger(0xFFF)
    assert not MainArray.is_cim_trigger(0)


def test_compute_word_roundtrip():
    rng = random.Random(3)
    words = [rng.getrandbits(40) for _ in range(WORDS)]
    block = MainArray()
    block.load_words(words)
    block.enter_compute()
    for w in (0, 1, 2, 3, 4, 7, 200, 511):
        assert block.cim_read40(w) == words[w]
    assert block.dump_words() == words


def test_compute_write_then_read():
    block = MainArray(mode=Mode.COMPUTE)
    block.cim_write40(37, 0xABCDE12345)
    assert block.cim_read40(37) == 0xABCDE12345
    assert block.cim_read40(36) == 0  # neighbors untouched
    assert block.cim_read40(38) == 0


def test_mode_violations_raise():
    block = MainArray()
    with pytest.raises(RuntimeError):
        block.cim_read40(0)
    with pytest.raises(RuntimeError):
        block.cim_write40(0, 1)
    block.enter_compute()
    with pytest.raises(RuntimeError):
        block.mem_access([PortOp("a", "read", 0)])


def test_memory_mode_dual_port_semantics():
    block = MainArray()
    block.mem_write(5, 123)
    # read-during-write returns old data
    out = block.mem_access([PortOp("a", "read", 5),
                            PortOp("b", "write", 5, 99)])
    assert out == {"a": 123}
    assert block.mem_read(5) == 99
    with pytest.raises(ValueError):
        block.mem_access([PortOp("a", "write", 7, 1),
                          PortOp("b", "write", 7, 2)])
    with pytest.raises(ValueError):
        block.mem_access([PortOp("a", "read", 0),
                          PortOp("a", "read", 1)])


def test_narrow_memory_aspect_ratio():
    block = MainArray(mem_width=20)
    block.mem_write(1023, 0xFFFFF)
    assert block.mem_read(1023) == 0xFFFFF
    with pytest.raises(ValueError):
        block.mem_read(1024)
    with pytest.raises(ValueError):
        MainArray(mem_width=10)


def test_stale_copy_warning():
    block = MainArray(mode=Mode.COMPUTE)
    block.cim_write40(12, 7)
    block.note_copied(12)
    with pytest.warns(StaleCopyWarning):
        block.cim_write40(12, 8)
    # leaving and re-entering compute mode clears the tracking
    block.exit_compute()
    block.enter_compute()
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        block.cim_write40(12, 9)


def test_tile_image_roundtrips(tmp_path):
    rng = random.Random(4)
    words = [rng.getrandbits(40) for _ in range(WORDS)]
    hex_path = tmp_path / "tile.hex"
    bin_path = tmp_path / "tile.bin"
    save_tile_hex(hex_path, words)
    save_tile_bin(bin_path, words)
    assert load_tile_hex(hex_path) == words
    assert load_tile_bin(bin_path) == words
    assert bin_path.stat().st_size == 5 * WORDS


def test_tile_hex_rejects_wide_words(tmp_path):
    p = tmp_path / "bad.hex"
    p.write_text("10000000000\n")
    with pytest.raises(ValueError):
        load_tile_hex(p)
