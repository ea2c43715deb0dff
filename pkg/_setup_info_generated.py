version = '1.0.0'
long_version = '1.0.0+setup-fallback-version'
