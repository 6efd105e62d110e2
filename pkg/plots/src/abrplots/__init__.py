from .render import (SchemaError, read_throughput, render_client_timeline,
                     render_throughput)

__version__ = "0.1.0"
