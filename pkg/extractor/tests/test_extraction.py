import numpy as np
import pytest
from scipy.io import wavfile

from extractor.audio import load_clip
from extractor.cli import main
from extractor.extraction import AudioManifest, discover_clips, extract
from extractor.features import MfccParams, mfcc_stats

# interoperability checks go through the analysis engine's reader
from clusterprune.core import read_embeddings, read_labels

RATE = 16_000


def write_wav(path, samples, rate=RATE):
    wavfile.write(path, rate, (np.clip(samples, -1, 1) * 32767).astype(np.int16))


def tone(freq, seconds=1.0, rate=RATE, amp=0.5):
    t = np.arange(int(seconds * rate)) / rate
    return amp * np.sin(2 * np.pi * freq * t)


@pytest.fixture()
def toy_root(tmp_path):
    root = tmp_path / "clips"
    (root / "go").mkdir(parents=True)
    (root / "stop").mkdir()
    write_wav(root / "go" / "a.wav", tone(440))
    write_wav(root / "go" / "b.wav", tone(880, seconds=0.5))  # padded to 1 s
    write_wav(root / "stop" / "c.wav", tone(220))
    return root


def test_discover_sorted_order(toy_root):
    clips = discover_clips(toy_root)
    assert [(c, p.name) for c, p in clips] == [
        ("go", "a.wav"),
        ("go", "b.wav"),
        ("stop", "c.wav"),
    ]


def test_extract_parses_through_primary_reader(toy_root, tmp_path):
    prefix = str(tmp_path / "toy")
    summary = extract(AudioManifest(root=str(toy_root)), prefix)
    assert summary == {"rows": 3, "dims": 26, "classes": 2, "skipped": 0}

    X = read_embeddings(f"{prefix}.emb")
    assert (X.n_samples, X.n_dims) == (3, 26)
    y = read_labels(f"{prefix}.lbl")
    assert y.n_classes == 2
    assert y.class_names == ("go", "stop")
    assert np.array_equal(y.class_ids, [0, 0, 1])
    assert (tmp_path / "toy.skiplog").read_text() == ""


def test_rerun_is_byte_identical(toy_root, tmp_path):
    manifest = AudioManifest(root=str(toy_root))
    extract(manifest, str(tmp_path / "one"))
    extract(manifest, str(tmp_path / "two"))
    assert (tmp_path / "one.emb").read_bytes() == (tmp_path / "two.emb").read_bytes()
    assert (tmp_path / "one.lbl").read_bytes() == (tmp_path / "two.lbl").read_bytes()


def test_silent_clip_yields_finite_row(tmp_path):
    root = tmp_path / "clips"
    (root / "quiet").mkdir(parents=True)
    (root / "loud").mkdir()
    write_wav(root / "quiet" / "z.wav", np.zeros(RATE))
    write_wav(root / "loud" / "l.wav", tone(440))
    prefix = str(tmp_path / "out")
    summary = extract(AudioManifest(root=str(root)), prefix)
    assert summary["skipped"] == 0
    X = read_embeddings(f"{prefix}.emb")
    assert np.all(np.isfinite(X.values))


def test_unreadable_clip_is_skipped_and_logged(toy_root, tmp_path, capsys):
    (toy_root / "go" / "broken.wav").write_bytes(b"not really a wav file")
    prefix = str(tmp_path / "out")
    summary = extract(AudioManifest(root=str(toy_root)), prefix)
    assert summary["rows"] == 3 and summary["skipped"] == 1
    skiplog = (tmp_path / "out.skiplog").read_text()
    assert "broken.wav" in skiplog
    assert "skipping" in capsys.readouterr().err


def test_empty_class_aborts(tmp_path):
    root = tmp_path / "clips"
    (root / "only").mkdir(parents=True)
    with pytest.raises(ValueError, match="no .wav clips"):
        extract(AudioManifest(root=str(root)), str(tmp_path / "out"))


def test_all_clips_of_class_failing_aborts(toy_root, tmp_path):
    (toy_root / "hiss").mkdir()
    (toy_root / "hiss" / "bad.wav").write_bytes(b"junk")
    with pytest.raises(ValueError, match="hiss"):
        extract(AudioManifest(root=str(toy_root)), str(tmp_path / "out"))


def test_resampling_and_padding(tmp_path):
    path = tmp_path / "x.wav"
    write_wav(path, tone(200, seconds=0.75, rate=8_000), rate=8_000)
    out = load_clip(path, RATE, 1.0)
    assert out.size == RATE
    assert np.abs(out[: int(0.7 * RATE)]).max() > 0.1  # signal survived resampling
    assert np.abs(out[int(0.8 * RATE) :]).max() == 0.0  # zero padding at the tail


def test_mfcc_dimensions_scale_with_n_mfcc():
    samples = tone(300)
    for n_mfcc in (5, 13, 20):
        row = mfcc_stats(samples, RATE, MfccParams(n_mfcc=n_mfcc))
        assert row.shape == (2 * n_mfcc,)


def test_mfcc_distinguishes_tones():
    a = mfcc_stats(tone(200), RATE, MfccParams())
    b = mfcc_stats(tone(2000), RATE, MfccParams())
    assert np.linalg.norm(a - b) > 1.0


def test_cli_end_to_end(toy_root, tmp_path, capsys):
    prefix = str(tmp_path / "cli_out")
    assert main(["--root", str(toy_root), "--features", "mfcc", "--out", prefix]) == 0
    assert "3 rows x 26 dims, 2 classes" in capsys.readouterr().out
    assert read_embeddings(f"{prefix}.emb").values.shape == (3, 26)


def test_cli_error_path(tmp_path, capsys):
    assert main(["--root", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_wav2vec2_path_if_model_available(toy_root, tmp_path):
    pytest.importorskip("transformers")
    from extractor.features import _load_wav2vec2

    try:
        _load_wav2vec2("facebook/wav2vec2-base")
    except Exception as exc:  # no network access to the model hub
        pytest.skip(f"pretrained model unavailable: {exc}")
    prefix = str(tmp_path / "w2v")
    summary = extract(
        AudioManifest(root=str(toy_root), features="wav2vec2-mean-pool"), prefix
    )
    assert summary["rows"] == 3
    assert read_embeddings(f"{prefix}.emb").n_dims == 768
