"""End-to-end command-line behavior, run in process via main(argv)."""

from __future__ import annotations

import json

import numpy as np
import pytest

from cascadekit.cli import main
from cascadekit.manifests import save_network, write_cascade_manifest
from cascadekit.nn.spec import NetworkSpec, dense, flatten, spec_hash
from cascadekit.nn.weights import WeightBundle, expected_blocks

SIZE = 24


def biased_network(channels: int, bias: float):
    """Flatten + dense head with zero kernel: score is sigmoid(bias) for
    every input, so cascade behavior is fully determined by `bias`."""
    spec = NetworkSpec((8, 8, channels), (flatten(),
                                          dense(1, activation="sigmoid")))
    blocks = {}
    for idx, name, shape in expected_blocks(spec):
        arr = np.zeros(shape, dtype=np.float32)
        if name == "bias":
            arr[:] = bias
        blocks.setdefault(idx, {})[name] = arr
    return spec, WeightBundle(spec_hash(spec), blocks)


def write_cascade(tmp_path, bias_c: float, bias_l: float) -> str:
    spec_c, bundle_c = biased_network(3, bias_c)
    spec_l, bundle_l = biased_network(1, bias_l)
    save_network(str(tmp_path / "c.cgw"), spec_c, bundle_c)
    save_network(str(tmp_path / "l.cgw"), spec_l, bundle_l)
    path = str(tmp_path / "cascade.txt")
    write_cascade_manifest(path, [("identity_rgb", "c.cgw", 0.9),
                                  ("grayscale", "l.cgw", 0.9)])
    return path


def gen_sequence_dir(tmp_path, name: str, timeline: str, fps: float = 10.0,
                     seed: int = 0) -> str:
    out = str(tmp_path / name)
    rc = main(["gen", "sequence", "--out", out, "--timeline", timeline,
               "--fps", f"{fps:g}", "--seed", str(seed), "--size", str(SIZE)])
    assert rc == 0
    return out


class TestTrain:
    def gen_data(self, tmp_path, seed: int = 0) -> str:
        out = str(tmp_path / "data")
        rc = main(["gen", "dataset", "--out", out, "--n-per-class", "12",
                   "--seed", str(seed), "--size", str(SIZE),
                   "--archetypes", "explosion", "plain"])
        assert rc == 0
        return out

    def test_train_writes_model_and_is_deterministic(self, tmp_path, capsys):
        data = self.gen_data(tmp_path)
        argv = ["train", "--data-dir", f"{data}/train", "--channels", "rgb",
                "--arch", "small", "--size", str(SIZE), "--epochs", "2",
                "--batch-size", "8", "--learning-rate", "0.05",
                "--seed", "3", "--out", ""]
        argv[-1] = str(tmp_path / "a.cgw")
        assert main(argv) == 0
        out = capsys.readouterr().out
        assert "best epoch" in out
        argv[-1] = str(tmp_path / "b.cgw")
        assert main(argv) == 0
        a = (tmp_path / "a.cgw").read_bytes()
        b = (tmp_path / "b.cgw").read_bytes()
        assert a == b
        assert (tmp_path / "a.cgw.spec.json").read_text() \
            == (tmp_path / "b.cgw.spec.json").read_text()

    def test_empty_class_dir_is_input_error(self, tmp_path, capsys):
        (tmp_path / "data" / "pos").mkdir(parents=True)
        (tmp_path / "data" / "neg").mkdir()
        rc = main(["train", "--data-dir", str(tmp_path / "data"),
                   "--out", str(tmp_path / "m.cgw")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_zero_epochs_is_input_error(self, tmp_path, capsys):
        data = self.gen_data(tmp_path)
        rc = main(["train", "--data-dir", f"{data}/train", "--size", str(SIZE),
                   "--epochs", "0", "--out", str(tmp_path / "m.cgw")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestClassify:
    def test_image_mode_report_and_determinism(self, tmp_path):
        seq = gen_sequence_dir(tmp_path, "seq", "plain_negative:1")
        cascade = write_cascade(tmp_path, bias_c=-2.0, bias_l=-2.0)
        argv = ["classify", "--cascade", cascade,
                "--frames", f"{seq}/frames.manifest", "--mode", "image",
                "--report", str(tmp_path / "r1.json")]
        assert main(argv) == 0
        argv[-1] = str(tmp_path / "r2.json")
        assert main(argv) == 0
        b1 = (tmp_path / "r1.json").read_bytes()
        assert b1 == (tmp_path / "r2.json").read_bytes()
        report = json.loads(b1)
        assert report["mode"] == "image"
        assert len(report["frames"]) == 10
        assert report["positives"] == 0
        assert report["invocations"] == [10, 0]
        entry = report["frames"][0]
        assert set(entry) == {"index", "path", "score", "label", "stage_reached"}
        assert entry["label"] == "negative"
        assert entry["stage_reached"] == 1

    def test_video_mode_lazy_skips_verifier_scores(self, tmp_path):
        seq = gen_sequence_dir(tmp_path, "seq", "plain_negative:1")
        cascade = write_cascade(tmp_path, bias_c=-2.0, bias_l=3.0)
        report_path = str(tmp_path / "video.json")
        rc = main(["classify", "--cascade", cascade,
                   "--frames", f"{seq}/frames.manifest", "--mode", "video",
                   "--window", "3", "--radius", "1", "--lazy",
                   "--report", report_path,
                   "--track-csv", str(tmp_path / "track.csv")])
        assert rc == 0
        report = json.loads((tmp_path / "video.json").read_text())
        assert report["mode"] == "video"
        assert report["lazy"] is True
        assert report["fps_effective"] == 10.0
        assert report["events"] == []
        # no primary positives, so the verifier never ran: scores are null
        assert all(f["score_l"] is None for f in report["per_frame"])
        assert all(f["score_c"] is not None for f in report["per_frame"])
        assert report["invocations"][1] == 0
        csv_text = (tmp_path / "track.csv").read_text().splitlines()
        assert csv_text[0] == "frame_index,score_C,label_C,score_L,label_L,final_label"
        assert len(csv_text) == 11

    def test_single_frame_video_agrees_with_image_mode(self, tmp_path):
        fps = 10.0
        seq = gen_sequence_dir(tmp_path, "seq", "explosion:0.1", fps=fps)
        cascade = write_cascade(tmp_path, bias_c=4.0, bias_l=4.0)
        img_path = str(tmp_path / "img.json")
        vid_path = str(tmp_path / "vid.json")
        base = ["classify", "--cascade", cascade,
                "--frames", f"{seq}/frames.manifest"]
        assert main(base + ["--mode", "image", "--report", img_path]) == 0
        assert main(base + ["--mode", "video", "--window", "1", "--radius", "0",
                            "--report", vid_path]) == 0
        img = json.loads((tmp_path / "img.json").read_text())
        vid = json.loads((tmp_path / "vid.json").read_text())
        assert len(img["frames"]) == 1
        assert img["frames"][0]["label"] == "positive"
        assert vid["per_frame"][0]["final"] == "positive"
        assert vid["events"] == [[0.0, 0.1]]
        assert img["frames"][0]["score"] == vid["per_frame"][0]["score_l"]

    def test_video_mode_requires_fps(self, tmp_path, capsys):
        seq = gen_sequence_dir(tmp_path, "seq", "plain_negative:0.5")
        manifest = tmp_path / "nofps.manifest"
        lines = (tmp_path / "seq" / "frames.manifest").read_text().splitlines()
        manifest.write_text("\n".join(f"seq/{l}" for l in lines
                                      if not l.startswith("fps=")) + "\n")
        cascade = write_cascade(tmp_path, -2.0, -2.0)
        rc = main(["classify", "--cascade", cascade, "--frames", str(manifest),
                   "--mode", "video"])
        assert rc == 2
        assert "fps" in capsys.readouterr().err

    def test_projection_channel_mismatch_is_config_error(self, tmp_path, capsys):
        spec, bundle = biased_network(3, 0.0)
        save_network(str(tmp_path / "c.cgw"), spec, bundle)
        path = str(tmp_path / "cascade.txt")
        # grayscale projection feeds 1 channel into a 3-channel network
        write_cascade_manifest(path, [("grayscale", "c.cgw", 0.9)])
        seq = gen_sequence_dir(tmp_path, "seq", "plain_negative:0.5")
        rc = main(["classify", "--cascade", path,
                   "--frames", f"{seq}/frames.manifest"])
        assert rc == 4
        assert "configuration mismatch:" in capsys.readouterr().err


class TestEvaluate:
    def test_worked_scenario(self, tmp_path):
        events = tmp_path / "events.json"
        events.write_text(json.dumps([[2.2, 2.8], [12.4, 12.6]]))
        truth = tmp_path / "truth.csv"
        truth.write_text("start_s,end_s,label\n"
                         "2,3,explosion\n10,11.5,explosion\n20,21,explosion\n")
        out = tmp_path / "eval.json"
        rc = main(["evaluate", "--events", str(events), "--truth", str(truth),
                   "--tolerance", "1.0", "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        video = report["videos"]["events.json"]
        assert (video["tp"], video["fp"], video["fn"]) == (2, 0, 1)
        assert video["precision"] == 1.0
        assert video["recall"] == pytest.approx(2 / 3)
        assert video["f1"] == pytest.approx(0.8)
        assert report["aggregate"]["median_f1"] == pytest.approx(0.8)

    def test_accepts_classify_report_as_events(self, tmp_path):
        events = tmp_path / "report.json"
        events.write_text(json.dumps({"mode": "video", "events": [[0.0, 1.0]]}))
        truth = tmp_path / "truth.csv"
        truth.write_text("start_s,end_s,label\n0,1,explosion\n")
        out = tmp_path / "eval.json"
        rc = main(["evaluate", "--events", str(events), "--truth", str(truth),
                   "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["videos"]["report.json"]["tp"] == 1

    def test_mismatched_file_counts(self, tmp_path, capsys):
        events = tmp_path / "e.json"
        events.write_text("[]")
        rc = main(["evaluate", "--events", str(events), str(events),
                   "--truth", str(events)])
        assert rc == 2
        assert "event files vs" in capsys.readouterr().err


class TestGen:
    def test_dataset_layout_and_checksums(self, tmp_path):
        outs = []
        for name in ("d1", "d2"):
            out = tmp_path / name
            rc = main(["gen", "dataset", "--out", str(out),
                       "--n-per-class", "10", "--seed", "9",
                       "--size", str(SIZE),
                       "--archetypes", "explosion", "light", "plain"])
            assert rc == 0
            outs.append(out)
        d1, d2 = outs
        rel_files = sorted(p.relative_to(d1) for p in d1.rglob("*.ppm"))
        assert rel_files == sorted(p.relative_to(d2) for p in d2.rglob("*.ppm"))
        for rel in rel_files:
            assert (d1 / rel).read_bytes() == (d2 / rel).read_bytes()
        names = {str(p) for p in rel_files}
        assert any(s.startswith("train/pos/explosion") for s in names)
        assert any(s.startswith("train/neg/light_source_confuser") for s in names)
        assert not any("structure" in s for s in names)
        meta = json.loads((d1 / "gen_meta.json").read_text())
        assert meta["seed"] == 9
        assert meta["archetypes"] == ["explosion", "light_source_confuser",
                                      "plain_negative"]

    def test_sequence_outputs(self, tmp_path):
        out = gen_sequence_dir(tmp_path, "seq",
                               "plain_negative:0.5,explosion:0.5", fps=8.0)
        frames = sorted((tmp_path / "seq" / "frames").glob("*.ppm"))
        assert len(frames) == 8
        manifest = (tmp_path / "seq" / "frames.manifest").read_text()
        assert manifest.startswith("fps=8\n")
        truth = (tmp_path / "seq" / "truth.csv").read_text().splitlines()
        assert truth[0] == "start_s,end_s,label"
        assert truth[1].startswith("0.5,1,")

    def test_alias_and_canonical_names_agree(self, tmp_path):
        a = gen_sequence_dir(tmp_path, "a", "plain:0.3", seed=4)
        b = gen_sequence_dir(tmp_path, "b", "plain_negative:0.3", seed=4)
        fa = sorted((tmp_path / "a" / "frames").glob("*.ppm"))
        fb = sorted((tmp_path / "b" / "frames").glob("*.ppm"))
        assert [p.read_bytes() for p in fa] == [p.read_bytes() for p in fb]

    def test_bad_timeline_is_input_error(self, tmp_path, capsys):
        rc = main(["gen", "sequence", "--out", str(tmp_path / "x"),
                   "--timeline", "explosion", "--fps", "10"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_params_report(self, tmp_path):
        out = tmp_path / "params.json"
        rc = main(["bench", "params", "--arch", "standard",
                   "--input-side", "300", "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["kind"] == "params"
        assert report["data"]["params_per_model"] == {"rgb": 1_211_649,
                                                      "gray": 1_210_049}

    def test_backends_report(self, tmp_path):
        out = tmp_path / "backends.json"
        rc = main(["bench", "backends", "--channels", "1", "--size", "16",
                   "--batch", "2", "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["kind"] == "backends"
        assert report["data"]["batch"] == [2, 16, 16, 1]

    def test_latency_report(self, tmp_path):
        seq = gen_sequence_dir(tmp_path, "seq", "plain_negative:10", fps=10.0)
        cascade = write_cascade(tmp_path, -2.0, -2.0)
        out = tmp_path / "latency.json"
        rc = main(["bench", "latency", "--cascade", cascade,
                   "--frames", f"{seq}/frames.manifest", "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["kind"] == "latency"
        assert report["data"]["n_frames"] == 100
        assert report["data"]["invocations"] == [100, 0]
