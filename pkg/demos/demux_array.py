"""
Addressing a DAC array through a DEMUX tree
===========================================

Four select lines route an SFQ train to one of sixteen DACs. Only the
addressed cell changes.
"""

from fluxdac.dac import DacState
from fluxdac.sfq import DemuxTree, array_report, load_schedule, program_array
from fluxdac.units import get_preset

dev = get_preset("C4R1-DAC1")
tree = DemuxTree(4)
dacs = [DacState.initial(dev) for _ in range(tree.port_count)]

schedule = load_schedule("""[
  {"select": "0000", "polarity": 1, "count": 5},
  {"select": "1010", "polarity": -1, "count": 12},
  {"select": "1111", "polarity": 1, "count": 40},
  {"select": "0000", "polarity": -1, "count": 2}
]""")
dacs = program_array(dacs, tree, schedule)
for row in array_report(dacs):
    if row["digit"] != 0:
        print(row)
print(f"{sum(d.digit == 0 for d in dacs)} of {len(dacs)} DACs untouched")
