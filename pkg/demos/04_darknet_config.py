"""Darknet artifact generation: .names, .data, the class-adapted .cfg, and
the exact command lines.  Nothing here runs the trainer; the commands are
text for the user to execute where Darknet (and a GPU) live.

Run:  python3 demos/04_darknet_config.py
"""

from pathlib import Path

from yoloprep import (
    ProjectConfig,
    default_hyper,
    emit_commands,
    load_default_template,
    render_cfg,
    render_data,
    render_names,
)
from yoloprep.dataset import LayoutPaths

classes = ["stoma"]
print(".names file:")
print(render_names(classes))

# the .cfg template ships with the package: stock YOLOv3, 80 classes
template = load_default_template()
print(f"template: {len(template.splitlines())} lines, "
      f"{template.count('[yolo]')} detection heads")

# adapting to 1 class rewrites classes= in each [yolo] section and filters=
# in the convolutional layer before it: (1 class + 5) * 3 anchors = 18
hyper = default_hyper(len(classes))
rendered = render_cfg(template, len(classes), hyper)
changed = [(a, b) for a, b in zip(template.splitlines(), rendered.splitlines())
           if a != b]
print(f"\nadapted lines ({len(changed)}):")
for before, after in changed:
    print(f"  {before!r:>28} -> {after!r}")

# .data + commands want a materialized layout; point at a hypothetical one
project_dir = Path("/work/out/stomata")
layout = LayoutPaths(
    project_dir=project_dir,
    images_dir=project_dir / "images",
    train_list=project_dir / "train.txt",
    test_list=project_dir / "test.txt",
    backup_dir=project_dir / "backup",
)
project = ProjectConfig(name="stomata", dataset_path=Path("/work/data"),
                        classes=classes, train_pct=0.9,
                        output_root=Path("/work/out"), hyper=hyper)
print("\n.data file:")
print(render_data(project, layout))
print("commands:")
for command in emit_commands(project, layout):
    print(" ", command)
