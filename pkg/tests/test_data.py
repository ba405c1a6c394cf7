import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cascrnet import CLASS_NAMES
from cascrnet.data import (
    batch_iter,
    class_weights,
    class_weights_from_counts,
    decode_cten,
    decode_ppm,
    encode_cten,
    encode_ppm,
    load_image,
    load_manifest,
    normalize,
    parse_manifest,
    read_cten,
    resize_bilinear,
    stratified_split,
    write_cten,
    write_manifest,
    write_shapes_dataset,
)
from cascrnet.errors import DataError, FormatError


def manifest_text(rows, eol="\n"):
    return eol.join(["path,label"] + [f"{p},{c}" for p, c in rows]) + eol


ONE_PER_CLASS = [(f"img{i}.ppm", c) for i, c in enumerate(CLASS_NAMES)]


# manifest ----------------------------------------------------------------------


def test_manifest_one_row_per_class(tmp_path):
    m = parse_manifest(manifest_text(ONE_PER_CLASS), tmp_path)
    assert m.histogram() == [1] * 10
    assert list(m.paths) == [p for p, _ in ONE_PER_CLASS]


def test_manifest_unknown_class_names_row(tmp_path):
    rows = ONE_PER_CLASS[:3] + [("x.ppm", "Polyps")]
    with pytest.raises(DataError, match="unknown class 'Polyps' at row 5"):
        parse_manifest(manifest_text(rows), tmp_path)


def test_manifest_crlf_matches_lf(tmp_path):
    (tmp_path / "lf.csv").write_bytes(manifest_text(ONE_PER_CLASS).encode())
    (tmp_path / "crlf.csv").write_bytes(manifest_text(ONE_PER_CLASS, "\r\n").encode())
    a, b = load_manifest(tmp_path / "lf.csv"), load_manifest(tmp_path / "crlf.csv")
    assert a == b


def test_manifest_rejects_duplicates_and_bad_header(tmp_path):
    with pytest.raises(DataError, match="duplicate"):
        parse_manifest(manifest_text([("a.ppm", "Normal"), ("a.ppm", "Polyp")]), tmp_path)
    with pytest.raises(DataError, match="header"):
        parse_manifest("file,class\na.ppm,Normal\n", tmp_path)


def test_manifest_missing_files_lists_first_ten(tmp_path):
    rows = [(f"m{i:02d}.ppm", "Normal") for i in range(12)]
    m = parse_manifest(manifest_text(rows), tmp_path)
    with pytest.raises(DataError) as exc:
        m.validate_files()
    msg = str(exc.value)
    assert "12 manifest file(s) missing" in msg
    assert "m09.ppm" in msg and "m10.ppm" not in msg


def test_manifest_write_round_trip(tmp_path):
    m = parse_manifest(manifest_text(ONE_PER_CLASS), tmp_path)
    write_manifest(tmp_path / "out.csv", m)
    assert load_manifest(tmp_path / "out.csv") == m


def test_missing_manifest_file(tmp_path):
    with pytest.raises(DataError, match="cannot read manifest"):
        load_manifest(tmp_path / "nope.csv")


# ppm -----------------------------------------------------------------------------


def test_ppm_two_pixels():
    img = decode_ppm(b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 255, 0]))
    assert (img.width, img.height) == (2, 1)
    assert img.pixels[0, 0].tolist() == [255, 0, 0]
    assert img.pixels[0, 1].tolist() == [0, 255, 0]


def test_ppm_comment_is_skipped():
    payload = bytes([255, 0, 0, 0, 255, 0])
    plain = decode_ppm(b"P6\n2 1\n255\n" + payload)
    commented = decode_ppm(b"P6\n# made by hand\n2 # width\n1\n255\n" + payload)
    assert np.array_equal(plain.pixels, commented.pixels)


def test_ppm_truncated_payload_offset():
    header = b"P6\n2 1\n255\n"
    with pytest.raises(FormatError) as exc:
        decode_ppm(header + bytes(5))
    assert exc.value.offset == len(header) + 5


@pytest.mark.parametrize("buf,offset", [(b"P3\n1 1\n255\n\0\0\0", 0), (b"P6\n1 1\n65535\n\0\0\0", 7)])
def test_ppm_header_errors(buf, offset):
    with pytest.raises(FormatError) as exc:
        decode_ppm(buf)
    assert exc.value.offset == offset


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 6), st.just(3))))
def test_ppm_round_trip(pixels):
    assert np.array_equal(decode_ppm(encode_ppm(pixels)).pixels, pixels)


# preprocessing ------------------------------------------------------------------------


def test_resize_constant_from_single_pixel():
    out = resize_bilinear(np.full((3, 1, 1), 77.0), 5, 7)
    assert out.shape == (3, 5, 7)
    assert np.all(out == 77.0)


def test_resize_half_pixel_row():
    out = resize_bilinear(np.array([[[0.0, 1.0]]]), 1, 3)
    assert np.allclose(out[0, 0], [0.0, 0.5, 1.0], atol=1e-12)


def test_resize_identity(rng):
    x = rng.uniform(0, 255, size=(3, 6, 9))
    assert np.max(np.abs(resize_bilinear(x, 6, 9) - x)) <= 1e-6


def test_resize_channels_independent(rng):
    x = rng.uniform(0, 255, size=(3, 5, 4))
    full = resize_bilinear(x, 8, 3)
    for c in range(3):
        assert np.array_equal(resize_bilinear(x[c:c + 1], 8, 3)[0], full[c])


def test_normalize_examples():
    out = normalize(np.array([255.0, 0.0, 128.0]), np.float64)
    assert out[0] == 1.0 and out[1] == -1.0
    assert out[2] == pytest.approx((128 / 255 - 0.5) / 0.5, abs=1e-15)
    assert out[2] == pytest.approx(0.003921, abs=1e-6)


def test_normalize_range_all_bytes():
    out = normalize(np.arange(256, dtype=np.float64))
    assert out.min() >= -1.0 and out.max() <= 1.0


def test_preprocessing_is_deterministic(tmp_path):
    m = write_shapes_dataset(tmp_path, 1, 32, seed=3)
    a = load_image(m.full_path(4), 24)
    b = load_image(m.full_path(4), 24)
    assert a.tobytes() == b.tobytes()


def test_load_image_from_cten(tmp_path, rng):
    px = rng.integers(0, 256, size=(3, 8, 8)).astype(np.float32)
    write_cten(tmp_path / "x.cten", px)
    out = load_image(tmp_path / "x.cten", 8, np.float64)
    assert np.allclose(out, normalize(px, np.float64))


def test_undecodable_file_names_path(tmp_path):
    (tmp_path / "bad.ppm").write_bytes(b"not an image")
    with pytest.raises(DataError, match="bad.ppm"):
        load_image(tmp_path / "bad.ppm", 8)


# split and weights ------------------------------------------------------------------


def grid_manifest(root, per_class):
    rows = [(f"{c}_{i}.ppm", name) for c, name in enumerate(CLASS_NAMES) for i in range(per_class[c])]
    return parse_manifest(manifest_text(rows), root)


def test_split_exact_per_class(tmp_path):
    m = grid_manifest(tmp_path, [10] * 10)
    tr, ho = stratified_split(m, 0.8, seed=0)
    assert tr.histogram() == [8] * 10
    assert ho.histogram() == [2] * 10


def test_split_deterministic_and_floor(tmp_path):
    m = grid_manifest(tmp_path, [3] * 10)
    a = stratified_split(m, 0.5, seed=4)
    b = stratified_split(m, 0.5, seed=4)
    assert a == b
    assert a[0].histogram() == [1] * 10


def test_split_rejects_absent_class(tmp_path):
    with pytest.raises(DataError, match="Worms"):
        stratified_split(grid_manifest(tmp_path, [3] * 9 + [0]), 0.5, 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=10, max_size=10),
       st.floats(0.05, 0.95), st.integers(0, 2**31))
def test_split_is_partition(counts, fraction, seed):
    m = grid_manifest("/data", counts)
    tr, ho = stratified_split(m, fraction, seed)
    assert set(tr.paths) | set(ho.paths) == set(m.paths)
    assert not set(tr.paths) & set(ho.paths)
    assert tr.histogram() == [int(np.floor(fraction * n)) for n in counts]


def test_class_weights_examples(tmp_path):
    assert np.allclose(class_weights(grid_manifest(tmp_path, [4] * 10)), 1.0)
    assert np.allclose(class_weights_from_counts([90, 10]), [0.5556, 5.0], atol=1e-3)
    with pytest.raises(DataError, match="Normal"):
        class_weights(grid_manifest(tmp_path, [1] * 6 + [0] + [1] * 3))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(1, 10**6), min_size=2, max_size=12))
def test_class_weights_mean_is_one(counts):
    w = class_weights_from_counts(counts)
    n = np.asarray(counts, dtype=np.float64)
    assert np.all(w > 0)
    assert abs((n * w).sum() - n.sum()) <= 1e-9 * n.sum()


# batching --------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def ten(tmp_path_factory):
    return write_shapes_dataset(tmp_path_factory.mktemp("ten"), 1, 16, seed=0)


def order_of(manifest, seed, epoch, bs=4):
    out = []
    for x, y in batch_iter(manifest, bs, seed, epoch, 16, dtype=np.float64):
        for img in x.data:
            out.append(img.tobytes())
    return out


def test_batch_sizes(ten):
    assert [len(y) for _, y in batch_iter(ten, 4, 0, 0, 16)] == [4, 4, 2]


def test_batch_seeding(ten):
    e1 = order_of(ten, 0, 1)
    assert order_of(ten, 0, 1) == e1
    assert order_of(ten, 0, 2) != e1


def test_batch_is_permutation(ten):
    labels = np.concatenate([y for _, y in batch_iter(ten, 3, 9, 0, 16)])
    assert sorted(labels.tolist()) == list(range(10))


def test_batch_shapes_and_dtype(ten):
    x, y = next(batch_iter(ten, 4, 0, 0, 16))
    assert x.shape == (4, 3, 16, 16) and x.dtype == np.float32
    assert y.dtype == np.int64


def test_flip_augmentation_only_flips(ten):
    plain = {y[0]: x.data[0] for x, y in batch_iter(ten, 1, 0, 0, 16)}
    for x, y in batch_iter(ten, 1, 0, 0, 16, augment_flip=True):
        img = x.data[0]
        assert np.array_equal(img, plain[y[0]]) or np.array_equal(img, plain[y[0]][..., ::-1])


# cten ------------------------------------------------------------------------------------


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_cten_round_trip_file(tmp_path, rng, dtype):
    t = rng.normal(size=(3, 4, 5)).astype(dtype)
    write_cten(tmp_path / "t.cten", t)
    back = read_cten(tmp_path / "t.cten").data
    assert back.dtype == dtype and back.shape == (3, 4, 5)
    assert back.tobytes() == t.tobytes()


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(st.sampled_from([np.float32, np.float64]), hnp.array_shapes(min_dims=0, max_dims=4, max_side=4),
                  elements=st.floats(allow_nan=False, width=32)))
def test_cten_round_trip_property(arr):
    back = decode_cten(encode_cten(arr)).data
    assert back.dtype == arr.dtype and back.shape == arr.shape
    assert back.tobytes() == arr.tobytes()


def test_cten_layout_is_little_endian():
    buf = encode_cten(np.array([[1.0, 2.0]], dtype=np.float32))
    assert buf[:4] == b"CTEN" and buf[4:7] == bytes([1, 0, 2])
    assert struct.unpack("<II", buf[7:15]) == (1, 2)
    assert buf[15:] == struct.pack("<2f", 1.0, 2.0)


def test_cten_bad_magic(tmp_path):
    buf = b"CTEM" + encode_cten(np.zeros(2, np.float32))[4:]
    (tmp_path / "m.cten").write_bytes(buf)
    with pytest.raises(FormatError) as exc:
        read_cten(tmp_path / "m.cten")
    assert exc.value.offset == 0
    assert "m.cten" in str(exc.value)


@pytest.mark.parametrize("pos,value", [(4, 2), (5, 7)])
def test_cten_bad_version_and_dtype(pos, value):
    buf = bytearray(encode_cten(np.zeros(2, np.float32)))
    buf[pos] = value
    with pytest.raises(FormatError) as exc:
        decode_cten(bytes(buf))
    assert exc.value.offset == pos


def test_cten_length_mismatch():
    buf = b"CTEN" + bytes([1, 0, 2]) + struct.pack("<II", 2, 2) + struct.pack("<3f", 1, 2, 3)
    with pytest.raises(FormatError, match="payload"):
        decode_cten(buf)
