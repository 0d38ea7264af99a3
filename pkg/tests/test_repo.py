"""Repository adapters: the JSON snapshot form and the git CLI form."""

import datetime
import json
import os
import shutil
import subprocess

import pytest

from patchloom.repo import (
    CommitRecord,
    GitCliRepo,
    InMemoryRepo,
    RepositoryError,
    normalize_lines,
    open_repository,
)

SNAPSHOT = {"commits": [
    {
        "id": "c1", "time": "2013-04-01T10:00:00", "message": "initial",
        "parents": [],
        "files": {"A.java": "int a = 1;\nint b = 2;\n", "note.txt": "x\n"},
    },
    {
        "id": "c2", "time": "2013-06-01T10:00:00", "message": "fix: adjust b",
        "parents": ["c1"],
        "files": {"A.java": "int a = 1;\nint b = 3;\n", "note.txt": "x\n"},
    },
    {
        "id": "c3", "time": "2014-01-05T10:00:00", "message": "add file",
        "parents": ["c2"],
        "files": {"A.java": "int a = 1;\nint b = 3;\n", "B.java": "int c;\n",
                  "note.txt": "x\n"},
    },
]}


@pytest.fixture()
def repo(tmp_path):
    path = tmp_path / "repo.json"
    path.write_text(json.dumps(SNAPSHOT))
    return InMemoryRepo.from_json(str(path))


def test_commits_sorted_by_time(repo):
    assert [c.id for c in repo.commits()] == ["c1", "c2", "c3"]


def test_commit_record_year_and_merge_flag(repo):
    c1 = repo.commit("c1")
    assert c1.year == 2013
    assert not c1.is_merge
    merge = CommitRecord(
        id="m",
        author_time=datetime.datetime(2014, 1, 1, tzinfo=datetime.timezone.utc),
        message="merge", parent_ids=("a", "b"),
    )
    assert merge.is_merge
    assert merge.year == 2014


def test_unix_timestamps_accepted(tmp_path):
    path = tmp_path / "repo.json"
    path.write_text(json.dumps({"commits": [
        {"id": "u1", "time": 1388534400, "message": "", "parents": [],
         "files": {}},
    ]}))
    repo = InMemoryRepo.from_json(str(path))
    assert repo.commit("u1").year == 2014


def test_unknown_commit_raises(repo):
    with pytest.raises(RepositoryError):
        repo.commit("nope")


def test_changed_java_files_modified_only(repo):
    # c2 modified A.java; note.txt is not java; B.java arrives in c3 as
    # an addition, which has no pre side to mine
    assert repo.changed_java_files(repo.commit("c2")) == ["A.java"]
    assert repo.changed_java_files(repo.commit("c3")) == []
    assert repo.changed_java_files(repo.commit("c1")) == []


def test_file_lines_and_missing_path(repo):
    assert repo.file_lines("c1", "A.java") == ["int a = 1;", "int b = 2;"]
    assert repo.file_lines("c1", "B.java") is None
    assert repo.file_lines("ghost", "A.java") is None


def test_normalize_lines_collapses_whitespace_and_blanks():
    raw = ["  int   a = 1;", "", "\t", "   return  a ;  "]
    assert normalize_lines(raw) == ["int a = 1;", "return a ;"]


def test_open_repository_dispatch(tmp_path):
    path = tmp_path / "snap.json"
    path.write_text(json.dumps(SNAPSHOT))
    assert isinstance(open_repository(str(path)), InMemoryRepo)
    assert isinstance(open_repository(str(tmp_path)), GitCliRepo)


@pytest.mark.skipif(shutil.which("git") is None, reason="git not installed")
def test_git_cli_repo_round_trip(tmp_path):
    def git(date, *args):
        env = {**os.environ,
               "GIT_AUTHOR_NAME": "t", "GIT_AUTHOR_EMAIL": "t@x",
               "GIT_COMMITTER_NAME": "t", "GIT_COMMITTER_EMAIL": "t@x",
               "GIT_AUTHOR_DATE": date, "GIT_COMMITTER_DATE": date}
        subprocess.run(["git", "-C", str(tmp_path), *args], check=True,
                       capture_output=True, env=env)

    first = "2015-03-01T12:00:00 +0000"
    second = "2015-03-02T12:00:00 +0000"
    git(first, "init", "-q")
    (tmp_path / "Main.java").write_text("int a = 1;\nint b = 2;\n")
    git(first, "add", "Main.java")
    git(first, "commit", "-q", "-m", "initial")
    (tmp_path / "Main.java").write_text("int a = 1;\nint b = 3;\n")
    git(second, "add", "Main.java")
    git(second, "commit", "-q", "-m", "fix b")

    repo = GitCliRepo(str(tmp_path))
    commits = repo.commits()
    assert [c.message for c in commits] == ["initial", "fix b"]
    assert commits[0].year == 2015
    head = commits[1]
    assert repo.changed_java_files(head) == ["Main.java"]
    assert repo.file_lines(head.id, "Main.java") == ["int a = 1;", "int b = 3;"]
    assert repo.file_lines(head.id, "Missing.java") is None
