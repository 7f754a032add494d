import sys
from pathlib import Path

# allow `import gradcheck` style helpers that live next to the tests
sys.path.insert(0, str(Path(__file__).parent))
