"""Generate one reference page per fsoturb module and the navigation between them."""

import pathlib

import mkdocs_gen_files

package = pathlib.Path(__file__).parent.parent.parent / "fsoturb"
nav = mkdocs_gen_files.Nav()

for path in sorted(package.glob("*.py")):
    # private modules such as the generated _version.py and the package __init__
    if path.stem.startswith("_"):
        continue

    page = pathlib.Path("reference", f"{path.stem}.md")
    nav[(path.stem,)] = f"{path.stem}.md"

    with mkdocs_gen_files.open(page, "w") as fd:
        fd.write(f"# fsoturb.{path.stem}\n\n::: fsoturb.{path.stem}\n")

    mkdocs_gen_files.set_edit_path(page, ".." / path)

with mkdocs_gen_files.open("reference/SUMMARY.md", "w") as nav_file:
    nav_file.writelines(nav.build_literate_nav())
