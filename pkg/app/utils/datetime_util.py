import datetime


def datetime_now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()
