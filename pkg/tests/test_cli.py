import json
import threading
import urllib.error
import urllib.request

import pytest

from cellpipe.cli import main
from cellpipe.serve import serve
from cellpipe.synthetic import build_blob_dataset


@pytest.fixture(scope="module")
def blob_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_blobs")
    build_blob_dataset(path, n_images=6, width=64, height=64, seed=2)
    return path


def run_cli(*argv):
    return main(list(argv))


class TestCliPipeline:
    def test_full_pipeline_exit_codes_and_report_line(self, blob_dir, tmp_path, capsys):
        out = str(tmp_path / "out")
        data = str(blob_dir)
        common = ["--dataset-dir", data, "--out-dir", out, "--folds", "2", "--seed", "4",
                  "--d4", "identity,fliph", "--gammas", "1,5/4"]

        assert run_cli("import", *common) == 0
        assert run_cli("augment", *common) == 0
        assert run_cli("split", *common) == 0
        assert run_cli("detect", "--fold-index", "1", *common) == 0
        assert run_cli("detect", "--fold-index", "2", *common) == 0
        assert run_cli("evaluate", "--fold-index", "1", *common) == 0
        assert run_cli("evaluate", "--fold-index", "2", *common) == 0
        assert run_cli("report", *common) == 0

        stdout = capsys.readouterr().out
        assert "accuracy:" in stdout
        assert "±" in stdout  # the mean ± std line

    def test_misuse_gives_nonzero_and_message(self, blob_dir, tmp_path, capsys):
        out = str(tmp_path / "fresh")
        common = ["--dataset-dir", str(blob_dir), "--out-dir", out]
        code = run_cli("evaluate", "--fold-index", "1", *common)
        assert code == 1
        assert "run 'import' first" in capsys.readouterr().err

    def test_missing_dataset_dir(self, tmp_path, capsys):
        code = run_cli(
            "import", "--dataset-dir", str(tmp_path / "nowhere"), "--out-dir", str(tmp_path / "o")
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, blob_dir, tmp_path):
        config_path = tmp_path / "run.json"
        config_path.write_text(
            json.dumps(
                {
                    "dataset_dir": str(blob_dir),
                    "out_dir": str(tmp_path / "out"),
                    "folds": 3,
                    "d4": ["identity"],
                    "gammas": ["1"],
                }
            )
        )
        assert run_cli("import", "--config", str(config_path)) == 0
        # flag wins over file: out-dir redirected
        assert run_cli("import", "--config", str(config_path), "--out-dir", str(tmp_path / "x")) == 0
        assert (tmp_path / "x" / "manifest.json").exists()

    def test_voc_import(self, tmp_path):
        (tmp_path / "a.xml").write_text(
            "<annotation><filename>a.png</filename>"
            "<size><width>64</width><height>64</height><depth>3</depth></size>"
            "<object><name>Artifact</name><bndbox>"
            "<xmin>4</xmin><ymin>4</ymin><xmax>20</xmax><ymax>20</ymax>"
            "</bndbox></object></annotation>"
        )
        code = run_cli(
            "import", "--format", "voc",
            "--dataset-dir", str(tmp_path), "--out-dir", str(tmp_path / "out"),
        )
        assert code == 0
        doc = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert doc["annotations"][0]["class"] == "Artifact"


class ServerFixture:
    def __init__(self, dataset_dir, detections_path=None):
        self.server = serve(dataset_dir, port=0, detections_path=detections_path)
        self.port = self.server.server_address[1]
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def url(self, path):
        return f"http://127.0.0.1:{self.port}{path}"

    def get(self, path):
        with urllib.request.urlopen(self.url(path)) as resp:
            return resp.status, json.loads(resp.read())

    def get_bytes(self, path):
        with urllib.request.urlopen(self.url(path)) as resp:
            return resp.status, resp.read()

    def put(self, path, doc):
        req = urllib.request.Request(
            self.url(path),
            data=json.dumps(doc).encode(),
            method="PUT",
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as err:
            return err.code, json.loads(err.read())

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def server(tmp_path):
    build_blob_dataset(tmp_path, n_images=3, width=64, height=64, seed=5)
    fixture = ServerFixture(tmp_path)
    yield fixture
    fixture.stop()


class TestServe:
    def test_list_images(self, server):
        status, doc = server.get("/api/images")
        assert status == 200
        assert len(doc["images"]) == 3
        assert all(entry["version"] == 1 for entry in doc["images"])

    def test_get_image_bytes(self, server):
        _, doc = server.get("/api/images")
        image_id = doc["images"][0]["image_id"]
        status, data = server.get_bytes(f"/api/image/{image_id}")
        assert status == 200
        assert data[:8] == b"\x89PNG\r\n\x1a\n"

    def test_annotation_roundtrip_and_version_bump(self, server, tmp_path):
        _, doc = server.get("/api/images")
        image_id = doc["images"][0]["image_id"]
        _, anns = server.get(f"/api/annotations/{image_id}")
        before = (tmp_path / "annotations.csv").read_text()

        # no-edit save: byte-identical CSV, version bumps
        status, reply = server.put(
            f"/api/annotations/{image_id}",
            {"version": anns["version"], "rows": anns["rows"]},
        )
        assert status == 200
        assert reply["version"] == anns["version"] + 1
        assert (tmp_path / "annotations.csv").read_text() == before

    def test_stale_version_conflicts(self, server):
        _, doc = server.get("/api/images")
        image_id = doc["images"][0]["image_id"]
        _, anns = server.get(f"/api/annotations/{image_id}")
        payload = {"version": anns["version"], "rows": anns["rows"]}
        assert server.put(f"/api/annotations/{image_id}", payload)[0] == 200
        status, reply = server.put(f"/api/annotations/{image_id}", payload)
        assert status == 409
        assert reply["version"] == anns["version"] + 1

    def test_put_rejects_invalid_rows(self, server):
        _, doc = server.get("/api/images")
        image_id = doc["images"][0]["image_id"]
        _, anns = server.get(f"/api/annotations/{image_id}")
        bad = {"version": anns["version"], "rows": [
            {"class": "Artifact", "xmin": 0, "ymin": 0, "xmax": 500, "ymax": 10}
        ]}
        status, reply = server.put(f"/api/annotations/{image_id}", bad)
        assert status == 400
        assert "outside" in reply["error"]

    def test_added_row_lands_in_csv(self, server, tmp_path):
        _, doc = server.get("/api/images")
        image_id = doc["images"][0]["image_id"]
        _, anns = server.get(f"/api/annotations/{image_id}")
        rows = anns["rows"] + [
            {"class": "MSC_cluster", "xmin": 1, "ymin": 1, "xmax": 9, "ymax": 9}
        ]
        status, _ = server.put(
            f"/api/annotations/{image_id}", {"version": anns["version"], "rows": rows}
        )
        assert status == 200
        text = (tmp_path / "annotations.csv").read_text()
        assert f"{image_id},64,64,MSC_cluster,1,1,9,9" in text

    def test_unknown_image_404(self, server):
        try:
            server.get("/api/annotations/ghost.png")
            raise AssertionError("expected 404")
        except urllib.error.HTTPError as err:
            assert err.code == 404

    def test_detections_absent_404(self, server):
        _, doc = server.get("/api/images")
        image_id = doc["images"][0]["image_id"]
        try:
            server.get(f"/api/detections/{image_id}")
            raise AssertionError("expected 404")
        except urllib.error.HTTPError as err:
            assert err.code == 404


def test_detections_endpoint_with_match_summary(tmp_path):
    from cellpipe.config import RunConfig
    from cellpipe.pipeline import run_full_pipeline

    data = tmp_path / "data"
    build_blob_dataset(data, n_images=4, width=64, height=64, seed=6)
    out = tmp_path / "out"
    config = RunConfig(
        dataset_dir=str(data),
        out_dir=str(out),
        folds=2,
        seed=1,
        d4=("identity",),
        gammas=("1",),
        detector="perturb",
        detector_params={"seed": 3},
    )
    run_full_pipeline(config)

    served_dir = out / "augmented"
    # derived annotations live in augmented.csv; serve that directory
    (served_dir / "annotations.csv").write_text((out / "augmented.csv").read_text())
    fixture = ServerFixture(served_dir, detections_path=out / "detections" / "fold_1.json")
    try:
        _, images = fixture.get("/api/images")
        det_doc = None
        for entry in images["images"]:
            try:
                _, det_doc = fixture.get(f"/api/detections/{entry['image_id']}")
                break
            except urllib.error.HTTPError:
                continue
        assert det_doc is not None
        assert det_doc["match"]["fn"] == 0  # identity perturbation: nothing missed
        assert det_doc["match"]["unmatched_gt"] == []
        assert all(p["class_match"] for p in det_doc["match"]["pairs"])
    finally:
        fixture.stop()
