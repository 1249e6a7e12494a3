import nox

PYTHON_VERSIONS = ["3.9", "3.10", "3.11", "3.12"]


@nox.session(python=PYTHON_VERSIONS, tags=["release"])
def installation(session):
    """Test installation of the package and of its console command."""
    session.install(".[tests]")
    session.run("pytest")
    session.run("mirrorflow", "validate", "ou_process")


@nox.session(python=["3.9"], tags=["dev"], reuse_venv=True)
def test(session):
    """Run the fast test suite."""
    session.install(".[tests]")
    session.run("pytest", *session.posargs)


@nox.session(python=["3.9"], tags=["dev"], reuse_venv=True)
def acceptance(session):
    """Run the slow acceptance checks."""
    session.install(".[tests]")
    session.run("pytest", "-m", "slow", *session.posargs)
