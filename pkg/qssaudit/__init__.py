# Two-timescale power system simulator with QSS stability audits
