# Result data models, presets and CSV/JSON export
