import pytest

from kgscout_eval import SplitError, load_split
from tests.conftest import FIX7_DIR


class TestLoadSplit:
    def test_jsonl(self, fix7_graph):
        cases = load_split(FIX7_DIR / "split.jsonl", graph=fix7_graph)
        assert [case.id for case in cases] == ["q1", "q2", "q3"]
        assert cases[0].answer_ids == ("P3",)

    def test_csv_with_integer_ids(self, tmp_path):
        path = tmp_path / "split.csv"
        path.write_text('id,query,answer_ids\n7,"papers, please","[12, 40]"\n')
        cases = load_split(path)
        assert cases[0].id == "7"
        assert cases[0].query == "papers, please"
        assert cases[0].answer_ids == ("12", "40")

    def test_tsv(self, tmp_path):
        path = tmp_path / "split.tsv"
        path.write_text('id\tquery\tanswer_ids\nq\tsomething\t["P1"]\n')
        assert load_split(path)[0].answer_ids == ("P1",)

    def test_duplicate_answers_are_merged(self, tmp_path):
        path = tmp_path / "split.jsonl"
        path.write_text('{"id": "q", "query": "x", "answer_ids": ["P1", "P1", "P2"]}\n')
        assert load_split(path)[0].answer_ids == ("P1", "P2")

    def test_empty_split(self, tmp_path):
        path = tmp_path / "split.jsonl"
        path.write_text("\n")
        with pytest.raises(SplitError, match="empty"):
            load_split(path)

    def test_duplicate_query_id(self, tmp_path):
        path = tmp_path / "split.jsonl"
        path.write_text('{"id": "q", "query": "x", "answer_ids": ["P1"]}\n{"id": "q", "query": "y", "answer_ids": ["P2"]}\n')
        with pytest.raises(SplitError, match="duplicate"):
            load_split(path)

    def test_empty_answer_set(self, tmp_path):
        path = tmp_path / "split.jsonl"
        path.write_text('{"id": "q", "query": "x", "answer_ids": []}\n')
        with pytest.raises(SplitError, match=":1"):
            load_split(path)

    def test_unknown_answer_id(self, tmp_path, fix7_graph):
        path = tmp_path / "split.jsonl"
        path.write_text('{"id": "q", "query": "x", "answer_ids": ["P9"]}\n')
        with pytest.raises(SplitError, match="P9"):
            load_split(path, graph=fix7_graph)

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "split.jsonl"
        path.write_text('{"id": "q", "query": "x", "answer_ids": ["P1"]}\n{oops\n')
        with pytest.raises(SplitError, match=":2"):
            load_split(path)

    def test_missing_csv_column(self, tmp_path):
        path = tmp_path / "split.csv"
        path.write_text("id,query\nq,x\n")
        with pytest.raises(SplitError, match="answer_ids"):
            load_split(path)

    def test_unsupported_extension(self, tmp_path):
        path = tmp_path / "split.parquet"
        path.write_text("")
        with pytest.raises(SplitError, match="unsupported"):
            load_split(path)
