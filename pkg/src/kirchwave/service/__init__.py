from .app import create_app
from .schemas import ProblemConfig, default_problem_config
