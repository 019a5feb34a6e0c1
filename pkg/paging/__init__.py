"""Paging package"""
