import os

import dotenv

dotenv.load_dotenv()

VPNET_THREADS: int = max(1, int(os.getenv("VPNET_THREADS", "1")))
VPNET_LOG_LEVEL: str = os.getenv("VPNET_LOG_LEVEL", "INFO").upper()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3
