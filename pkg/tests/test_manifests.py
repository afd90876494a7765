"""Frame and cascade manifests, plus weight-file/sidecar artifacts."""

from __future__ import annotations

import numpy as np
import pytest

from cascadekit.errors import InputError
from cascadekit.manifests import (FrameManifest, load_frames, load_network,
                                  parse_cascade_manifest, parse_frame_manifest,
                                  save_network, write_cascade_manifest,
                                  write_frame_manifest)
from cascadekit.nn.spec import small_network
from cascadekit.nn.weights import init_bundle
from cascadekit.ppm import write_ppm
from cascadekit.preprocess import ChannelProjection, Frame


def make_network(channels: int = 3, seed: int = 0):
    spec = small_network(channels, 32)
    return spec, init_bundle(spec, seed=seed)


class TestNetworkArtifacts:
    def test_save_writes_weights_and_sidecar(self, tmp_path):
        spec, bundle = make_network()
        path = str(tmp_path / "model.cgw")
        save_network(path, spec, bundle)
        assert (tmp_path / "model.cgw").exists()
        assert (tmp_path / "model.cgw.spec.json").exists()

    def test_round_trip_is_exact(self, tmp_path):
        spec, bundle = make_network(seed=7)
        path = str(tmp_path / "model.cgw")
        save_network(path, spec, bundle)
        spec2, bundle2 = load_network(path)
        assert spec2 == spec
        assert bundle2 == bundle

    def test_missing_sidecar_reports_sidecar_path(self, tmp_path):
        spec, bundle = make_network()
        path = str(tmp_path / "model.cgw")
        save_network(path, spec, bundle)
        (tmp_path / "model.cgw.spec.json").unlink()
        with pytest.raises(InputError, match="spec.json"):
            load_network(path)


class TestFrameManifest:
    def test_validation(self):
        with pytest.raises(InputError, match="stride"):
            FrameManifest(["a.ppm"], stride=0)
        with pytest.raises(InputError, match="fps"):
            FrameManifest(["a.ppm"], fps=0.0)

    def test_fps_effective_divides_by_stride(self):
        m = FrameManifest(["a", "b", "c", "d", "e"], fps=30.0, stride=3)
        assert m.fps_effective == 10.0
        assert m.sampled_paths() == ["a", "d"]
        assert FrameManifest(["a"]).fps_effective is None

    def test_parse_headers_comments_and_relative_paths(self, tmp_path):
        text = ("# camera dump\n"
                "fps=12.5\n"
                "stride=2  # keep every other frame\n"
                "\n"
                "frames/img0.ppm\n"
                "frames/img1.ppm # blurred\n"
                "img2.ppm\n")
        path = tmp_path / "frames.txt"
        path.write_text(text)
        m = parse_frame_manifest(str(path))
        assert m.fps == 12.5
        assert m.stride == 2
        assert m.paths == [str(tmp_path / "frames" / "img0.ppm"),
                           str(tmp_path / "frames" / "img1.ppm"),
                           str(tmp_path / "img2.ppm")]
        assert m.fps_effective == 6.25

    def test_bad_fps_names_line(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("# hdr\nfps=fast\na.ppm\n")
        with pytest.raises(InputError, match=r"m\.txt:2: bad fps"):
            parse_frame_manifest(str(path))

    def test_bad_stride_names_line(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("a.ppm\nstride=2.5\n")
        with pytest.raises(InputError, match=r"m\.txt:2: bad stride"):
            parse_frame_manifest(str(path))

    def test_empty_manifest_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("# only comments\nfps=10\n")
        with pytest.raises(InputError, match="no frame paths"):
            parse_frame_manifest(str(path))

    def test_missing_file_reports_path(self, tmp_path):
        with pytest.raises(InputError, match="gone.txt"):
            parse_frame_manifest(str(tmp_path / "gone.txt"))

    def test_write_then_parse_round_trip(self, tmp_path):
        path = tmp_path / "m.txt"
        write_frame_manifest(str(path), ["a.ppm", "b.ppm"], fps=24.0, stride=2)
        m = parse_frame_manifest(str(path))
        assert m.fps == 24.0
        assert m.stride == 2
        assert [p.rsplit("/", 1)[-1] for p in m.paths] == ["a.ppm", "b.ppm"]

    def test_load_frames_sets_post_stride_timestamps(self, tmp_path):
        rng = np.random.default_rng(0)
        rels = []
        for i in range(5):
            frame = Frame(rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8))
            name = f"f{i}.ppm"
            write_ppm(str(tmp_path / name), frame)
            rels.append(name)
        path = tmp_path / "m.txt"
        write_frame_manifest(str(path), rels, fps=10.0, stride=2)
        frames = load_frames(parse_frame_manifest(str(path)))
        assert len(frames) == 3
        assert [f.timestamp_index for f in frames] == [0, 1, 2]
        # frames come from the strided path list, not the full one
        assert np.array_equal(frames[1].data,
                              write_ppm_bytes_pixels(tmp_path / "f2.ppm"))


def write_ppm_bytes_pixels(path) -> np.ndarray:
    from cascadekit.ppm import read_ppm
    return read_ppm(str(path)).data


class TestCascadeManifest:
    def make_stage_files(self, tmp_path):
        spec_c, bundle_c = make_network(3, seed=1)
        spec_l, bundle_l = make_network(1, seed=2)
        save_network(str(tmp_path / "color.cgw"), spec_c, bundle_c)
        save_network(str(tmp_path / "gray.cgw"), spec_l, bundle_l)

    def test_round_trip(self, tmp_path):
        self.make_stage_files(tmp_path)
        path = str(tmp_path / "cascade.txt")
        write_cascade_manifest(path, [("identity_rgb", "color.cgw", 0.9),
                                      ("grayscale", "gray.cgw", 0.85)])
        spec = parse_cascade_manifest(path)
        assert len(spec.stages) == 2
        assert spec.stages[0].projection == ChannelProjection("identity_rgb")
        assert spec.stages[1].projection == ChannelProjection("grayscale")
        assert spec.stages[0].threshold == 0.9
        assert spec.stages[1].threshold == 0.85
        assert spec.stages[0].spec.input_dims[2] == 3
        assert spec.stages[1].spec.input_dims[2] == 1

    def test_comments_and_blank_lines(self, tmp_path):
        self.make_stage_files(tmp_path)
        path = tmp_path / "cascade.txt"
        path.write_text("# two stage setup\n\n"
                        "projection=identity_rgb weights=color.cgw threshold=0.9\n"
                        "projection=grayscale weights=gray.cgw threshold=0.9  # verifier\n")
        assert len(parse_cascade_manifest(str(path)).stages) == 2

    def test_missing_key_names_line(self, tmp_path):
        path = tmp_path / "cascade.txt"
        path.write_text("# hdr\nprojection=identity_rgb threshold=0.9\n")
        with pytest.raises(InputError, match=r"cascade\.txt:2: missing weights"):
            parse_cascade_manifest(str(path))

    def test_bare_token_names_line(self, tmp_path):
        path = tmp_path / "cascade.txt"
        path.write_text("projection=identity_rgb weights=w.cgw 0.9\n")
        with pytest.raises(InputError, match=r"cascade\.txt:1: expected key=value"):
            parse_cascade_manifest(str(path))

    def test_bad_threshold_names_line(self, tmp_path):
        path = tmp_path / "cascade.txt"
        path.write_text("projection=identity_rgb weights=w.cgw threshold=high\n")
        with pytest.raises(InputError, match=r"cascade\.txt:1: bad threshold"):
            parse_cascade_manifest(str(path))

    def test_empty_manifest_rejected(self, tmp_path):
        path = tmp_path / "cascade.txt"
        path.write_text("# nothing\n")
        with pytest.raises(InputError, match="no stages"):
            parse_cascade_manifest(str(path))

    def test_weights_resolve_relative_to_manifest(self, tmp_path):
        sub = tmp_path / "models"
        sub.mkdir()
        spec, bundle = make_network(3, seed=3)
        save_network(str(sub / "c.cgw"), spec, bundle)
        path = tmp_path / "cascade.txt"
        path.write_text("projection=identity_rgb weights=models/c.cgw threshold=0.9\n")
        spec2 = parse_cascade_manifest(str(path))
        assert spec2.stages[0].spec == spec
