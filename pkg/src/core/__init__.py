# Core functionality