import json
from unittest.mock import Mock, patch

import redis

from asymdpop.dependencies import CACHE_TTL, CacheService, solve_key

DOCUMENT = {"n_agents": 1, "domain_sizes": [2], "sides": []}

class TestSolveKey:
    def test_key_is_stable(self):
        config = {"k_p": "w*", "k_e": "all", "root": None}
        assert solve_key(DOCUMENT, config) == solve_key(dict(DOCUMENT), dict(reversed(list(config.items()))))
        assert solve_key(DOCUMENT, config).startswith("solve:")

    def test_key_depends_on_configuration(self):
        assert solve_key(DOCUMENT, {"k_p": "2"}) != solve_key(DOCUMENT, {"k_p": "3"})

class TestCacheService:
    def test_unreachable_redis_degrades_to_no_cache(self):
        """Without a server every lookup misses and every store reports failure"""
        cache = CacheService("redis://127.0.0.1:1")
        assert cache.redis_client is None
        assert cache.get("solve:x") is None
        assert cache.set("solve:x", {"cost": 1}) is False

    def test_connects_with_decoded_responses(self):
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            mock_from_url.return_value = Mock()
            cache = CacheService("redis://cache:6379")
        mock_from_url.assert_called_once_with("redis://cache:6379", decode_responses=True)
        mock_from_url.return_value.ping.assert_called_once()
        assert cache.redis_client is mock_from_url.return_value

    def test_failed_ping_disables_the_cache(self):
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            mock_from_url.return_value.ping.side_effect = redis.ConnectionError("refused")
            cache = CacheService()
        assert cache.redis_client is None
        assert cache.get("solve:x") is None

    def test_get_decodes_json(self):
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            client = Mock()
            client.get.return_value = json.dumps({"cost": 9, "assignment": {"0": 1}})
            mock_from_url.return_value = client
            cache = CacheService()
        assert cache.get("solve:x") == {"cost": 9, "assignment": {"0": 1}}
        client.get.assert_called_once_with("solve:x")

    def test_get_miss(self):
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            mock_from_url.return_value.get.return_value = None
            cache = CacheService()
        assert cache.get("solve:x") is None

    def test_set_stores_json_with_default_ttl(self):
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            cache = CacheService()
        assert cache.set("solve:x", {"cost": 9}) is True
        mock_from_url.return_value.setex.assert_called_once_with("solve:x", CACHE_TTL, json.dumps({"cost": 9}))

    def test_set_with_explicit_ttl(self):
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            cache = CacheService()
        cache.set("solve:x", {"cost": 9}, ttl=60)
        mock_from_url.return_value.setex.assert_called_once_with("solve:x", 60, json.dumps({"cost": 9}))

    def test_redis_errors_after_connect(self):
        """A server that drops after the ping turns lookups into misses and stores into failures"""
        with patch("asymdpop.dependencies.redis.from_url") as mock_from_url:
            client = Mock()
            client.get.side_effect = redis.ConnectionError("gone")
            client.setex.side_effect = redis.ConnectionError("gone")
            mock_from_url.return_value = client
            cache = CacheService()
        assert cache.get("solve:x") is None
        assert cache.set("solve:x", {"cost": 9}) is False
