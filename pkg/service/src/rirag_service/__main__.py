"""Entry point: `rirag-service [--config cfg.json] [--host H] [--port P]`."""
import argparse

import uvicorn

from .app import create_app
from .config import ServiceConfig


def main(argv=None):
    parser = argparse.ArgumentParser(prog="rirag-service")
    parser.add_argument("--config", help="JSON config with model bindings")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8100)
    args = parser.parse_args(argv)
    config = (ServiceConfig.from_file(args.config) if args.config
              else ServiceConfig())
    uvicorn.run(create_app(config), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
