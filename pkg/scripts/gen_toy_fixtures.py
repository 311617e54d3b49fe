"""Regenerate the committed toy backbone fixture files from the documented recurrence."""
from peo.backbones import toy

params = toy.build_params()
out = toy.fixture_dir()
toy.write_fixtures(params, out)
print(f"wrote fixtures to {out}")
for name, meta in toy.manifest_dict(params)["matrices"].items():
    print(f"  {name}: {meta['shape']} sha256={meta['sha256'][:16]}...")
