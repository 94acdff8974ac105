"""
Commands package for ONQ Lab.
Contains one module per subcommand, each exposing setup(subparsers).
"""
